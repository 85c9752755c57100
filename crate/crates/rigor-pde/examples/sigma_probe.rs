use rigor_pde::cheb::*;
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let k: usize = args[1].parse().unwrap();
    let budget: usize = args[2].parse().unwrap();
    let tol: f64 = args[3].parse().unwrap();
    let t0 = std::time::Instant::now();
    match sigma_optimal_with(k, budget, tol) {
        Ok(e) => println!("K={k}: [{:.6}, {:.6}] width {:.2e} in {:?}", e.lo, e.hi, e.width(), t0.elapsed()),
        Err(err) => println!("K={k}: error {err:?} after {:?}", t0.elapsed()),
    }
}
