use berknash::equilibrium::*;
use berknash::registry::*;
use berknash::synth::random_smooth_smdp;
use berknash::welfare::*;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let mut ok = 0;
    let mut solved = 0;
    for seed in 0..24u64 {
        let smdp = random_smooth_smdp(seed).unwrap();
        match solve_berk_nash(&smdp, &SolveOptions::default()) {
            Ok(eqs) => {
                solved += 1;
                let eq = &eqs[0];
                let correct = correct_policy(&smdp).unwrap();
                let rep = welfare_report(&smdp, eq, &correct).unwrap();
                let state_ok = rep.w_correct.iter().zip(&rep.w_misspec).all(|(c, m)| c >= &(m - 1e-9));
                println!(
                    "seed {seed:2}: gap={:.4e} bound={:.4e} sat={} state_ok={state_ok} gamma={:.3} k*={:.3e} n_eq={}",
                    rep.gap_supnorm, rep.bound, rep.bound_satisfied, rep.gamma, rep.k_star, eqs.len()
                );
                if rep.bound_satisfied && state_ok { ok += 1; }
            }
            Err(e) => println!("seed {seed:2}: solve error: {e}"),
        }
    }
    // The savings example too.
    let model = SavingsModel::new(&SavingsSpec::new(0.0, 0.6, 1.0, 0.9)).unwrap();
    let eqs = solve_berk_nash(&model.smdp, &SolveOptions::default()).unwrap();
    let correct = correct_policy(&model.smdp).unwrap();
    let rep = welfare_report(&model.smdp, &eqs[0], &correct).unwrap();
    println!("savings: gap={:.4e} bound={:.4e} sat={}", rep.gap_supnorm, rep.bound, rep.bound_satisfied);
    println!("ok {ok}/{solved} solved in {:.1}s", t0.elapsed().as_secs_f64());
}
