use optimist_core::bandit::{check_avg_excess_bound, run_bandit};
use optimist_core::instances::{first_order_instance, sublinear_instance, validity_instance};

fn mean_cumulative(inst: &optimist_core::instances::BanditInstance, n: usize, seeds: u64) -> Vec<f64> {
    let cfg = inst.ucb_config(0.05, n).unwrap();
    let env = inst.env(0).unwrap();
    let mut cum = vec![0.0; n];
    for s in 0..seeds {
        let tr = run_bandit(&env, &cfg, n, s).unwrap();
        for (c, r) in cum.iter_mut().zip(tr.cumulative_regret()) {
            *c += r / seeds as f64;
        }
    }
    cum
}

#[test]
fn regret_per_round_halves_from_500_to_5000() {
    let cum = mean_cumulative(&sublinear_instance(), 5000, 50);
    let early = cum[499] / 500.0;
    let late = cum[4999] / 5000.0;
    assert!(cum[4999].is_finite());
    assert!(early >= 2.0 * late, "R500/500 = {early}, R5000/5000 = {late}");
}

#[test]
fn small_cost_instance_has_smaller_regret() {
    let big = mean_cumulative(&first_order_instance(0.5), 2000, 10);
    let small = mean_cumulative(&first_order_instance(0.02), 2000, 10);
    assert!(small[1999] <= 0.5 * big[1999], "{} vs {}", small[1999], big[1999]);
}

#[test]
fn good_event_runs_satisfy_the_average_excess_bound() {
    let inst = validity_instance();
    let n = 1000;
    let cfg = inst.ucb_config(0.05, n).unwrap();
    let env = inst.env(0).unwrap();
    let table = inst.excess_table();
    for s in 0..10 {
        let tr = run_bandit(&env, &cfg, n, s).unwrap();
        assert!(tr.valid_throughout());
        assert_eq!(tr.optimism_violations(1e-12), 0);
        let rep = check_avg_excess_bound(&tr, &table).unwrap();
        assert!(rep.pass(), "{rep:?}");
    }
}

#[test]
fn traces_are_reproducible() {
    let inst = sublinear_instance();
    let cfg = inst.ucb_config(0.05, 300).unwrap();
    let env = inst.env(0).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_bandit(&env, &cfg, 300, 9).unwrap().write_csv(&mut a).unwrap();
    run_bandit(&env, &cfg, 300, 9).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}
