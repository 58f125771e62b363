use minent::operator::QuantumState;
use minent::registers::RegisterSpace;
use minent::smooth::{brute_force_smoothing_oracle, smooth_entropy, SmoothKind, SmoothingTask};
use minent::C64;

fn main() {
    let seed = 41u64;
    let s = RegisterSpace::new(vec![("A", 2), ("B", 2), ("C", 2)]).unwrap();
    let d = s.total_dim();
    let amps: Vec<C64> = (0..d)
        .map(|i| {
            C64::new(
                ((seed * 11 + i as u64) as f64 * 0.83).sin(),
                ((seed * 5 + i as u64) as f64 * 1.29).cos(),
            )
        })
        .collect();
    let psi = QuantumState::pure(s, &amps).unwrap();
    let rho_ab = psi.marginal(&["A", "B"]).unwrap();
    let rho_ac = psi.marginal(&["A", "C"]).unwrap();
    let eps = 0.1;
    let hmin = smooth_entropy(&rho_ab, &["A"], &["B"], SmoothKind::Min, eps).unwrap();
    println!("direct H_min^eps(A|B) = {:.9} (dist {:.2e})", hmin.value, hmin.witness_distance);
    let task = SmoothingTask::Entropy { a_regs: vec!["A"], b_regs: vec!["B"], kind: SmoothKind::Min };
    let oracle = brute_force_smoothing_oracle(&rho_ab, &task, eps, 24).unwrap();
    println!("oracle lower bound (A|B): {:.9}", oracle);
    let hmax = smooth_entropy(&rho_ac, &["A"], &["C"], SmoothKind::Max, eps).unwrap();
    println!("dual side −H_max^eps(A|C) = {:.9}", -hmax.value);
    let task2 = SmoothingTask::Entropy { a_regs: vec!["A"], b_regs: vec!["C"], kind: SmoothKind::Min };
    let oracle2 = brute_force_smoothing_oracle(&rho_ac, &task2, eps, 24).unwrap();
    println!("(oracle for A|C direct min: {:.9})", oracle2);
}
