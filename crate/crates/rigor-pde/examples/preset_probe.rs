//! Scratch driver for tuning preset parameters (not part of the library).
//! Usage: preset_probe <nu> <eps_inftyn> <eps_infty> <m_count> [big_n] [k] [naive]

use rigor_core::{CInterval, Cplx, Interval};
use rigor_pde::bounds::{compute_bounds, BoundsConfig};
use rigor_pde::cheb::SigmaTable;
use rigor_pde::problem::{equal_taus, PdeProblem};
use rigor_pde::prover::{prepare_orbit, prove_orbit, solve_radii};
use rigor_pde::seqspace::{SeqL1, Weights};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let nu: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1.05);
    let e1: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let e2: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let m_count: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(25);
    let big_n: i64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(14);
    let k: usize = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(2);
    let naive: bool = args.get(7).map(|s| s == "naive").unwrap_or(false);
    let ratio: f64 = args.get(8).map(|s| s.parse().unwrap()).unwrap_or(1.0);

    let t_end = 4.0;
    let l_x = 4.0 * std::f64::consts::PI;
    let mut f = SeqL1::zeros(big_n.max(4), nu);
    f.set(0, CInterval::point(Cplx::new(0.5, 0.0)));
    f.set(1, CInterval::point(Cplx::new(0.0, 0.25)));
    f.set(-1, CInterval::point(Cplx::new(0.0, -0.25)));
    f.set(2, CInterval::point(Cplx::new(-0.5, 0.0)));
    f.set(-2, CInterval::point(Cplx::new(-0.5, 0.0)));
    f.set(4, CInterval::point(Cplx::new(0.0, -0.1)));
    f.set(-4, CInterval::point(Cplx::new(0.0, 0.1)));
    let problem =
        PdeProblem::new(1, vec![vec![0.0, 1.0, -1.0], vec![0.0]], l_x, t_end, f, nu).unwrap();

    let cfg = BoundsConfig {
        k0: 0,
        quad_tol: 1e-10,
        r_star: 0.1,
        naive_linearization: naive,
    };
    let k0 = 4 * k + 16;
    let sigma = SigmaTable::formula_only(k0).unwrap();
    let taus = rigor_pde::problem::graded_taus(t_end, m_count, ratio);
    let _ = equal_taus;
    let t0 = std::time::Instant::now();
    let mut orbit =
        rigor_pde::problem::approximate_orbit(&problem, big_n, k, &taus).unwrap();
    for it in 0..8 {
        let resid = rigor_pde::problem::newton_sweep(&problem, &mut orbit, big_n, k).unwrap();
        eprintln!("newton iter {it}: residual {resid:.3e}");
        if resid < 1e-12 {
            break;
        }
    }
    eprintln!("orbit prepared in {:.1?}", t0.elapsed());
    let _ = prepare_orbit;
    let weights = vec![Weights::new(e1, e2, nu); m_count];
    let t1 = std::time::Instant::now();
    let report = match compute_bounds(&problem, &orbit, big_n, &weights, &sigma, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("bounds failed: {e}");
            std::process::exit(2);
        }
    };
    eprintln!("bounds computed in {:.1?}", t1.elapsed());
    for m in 0..m_count {
        if m % 5 == 0 || m == m_count - 1 {
            eprintln!(
                "diag m={m}: z0 {:.2e} kn {:.2e} infn {:.2e} inf {:.2e} | y {:.2e} | offrow kn {:.2e}",
                report.z0[m][m],
                report.z_kn[m][m],
                report.z_infn[m][m],
                report.z_inf[m][m],
                report.y_total(m),
                (0..m).map(|i| report.z_kn[m][i]).sum::<f64>()
            );
        }
    }
    // Print worst constituents.
    let mut worst_y = (0usize, 0.0f64);
    let mut worst_z = (0usize, 0.0f64);
    for m in 0..m_count {
        let y = report.y_total(m);
        if y > worst_y.1 {
            worst_y = (m, y);
        }
        let mut zr = 0.0;
        for i in 0..m_count {
            zr += report.z_total(m, i);
        }
        if zr > worst_z.1 {
            worst_z = (m, zr);
        }
    }
    eprintln!(
        "worst Y: m={} {:.3e} (kn {:.2e} infn {:.2e} inf {:.2e})",
        worst_y.0,
        worst_y.1,
        report.y_kn[worst_y.0],
        report.y_infn[worst_y.0],
        report.y_inf[worst_y.0]
    );
    let m = worst_z.0;
    let mut z0r = 0.0;
    let mut zkr = 0.0;
    let mut znr = 0.0;
    let mut zir = 0.0;
    let mut wr = 0.0;
    for i in 0..m_count {
        z0r += report.z0[m][i];
        zkr += report.z_kn[m][i];
        znr += report.z_infn[m][i];
        zir += report.z_inf[m][i];
        wr += report.w_total(m, i);
    }
    eprintln!(
        "worst Z row: m={m} total {:.3e} (z0 {:.2e} kn {:.2e} infn {:.2e} inf {:.2e}) Wrow {:.3e}",
        worst_z.1, z0r, zkr, znr, zir, wr
    );
    match solve_radii(&report) {
        Ok(sol) => {
            let mut sup = 0.0f64;
            for mm in 0..m_count {
                sup = sup.max(weights[mm].theta() * sol.r[mm]);
            }
            let rmax = sol.r.iter().cloned().fold(0.0f64, f64::max);
            println!("FEASIBLE sup_error {sup:.3e} r_max {rmax:.3e} elapsed {:.1?}", t0.elapsed());
        }
        Err(e) => {
            println!("INFEASIBLE: {e}");
            std::process::exit(2);
        }
    }
    let _ = Interval::ZERO;
}
