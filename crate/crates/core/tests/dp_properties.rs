use gwascombine_core::combine::Method;
use gwascombine_core::dp::{
    default_dp_methods, dp_analytic, run_dp, DpReport, DpScenario, SimMode, DEFAULT_CALIBRATION_DRAWS,
};
use gwascombine_core::genmodel::{AlleleFrequencySource, EffectModel, StudyDesign};

fn small(mode: SimMode) -> DpScenario {
    DpScenario {
        designs: StudyDesign::equal(3, 300).unwrap(),
        effect: EffectModel::FixedEffect { beta: 1.4f64.ln() },
        freq_source: AlleleFrequencySource::default(),
        n_snps: 20_000,
        n_disease: 5,
        t_list: vec![3, 50, 500],
        nsim: 24,
        seed: 17,
        sim_mode: mode,
        methods: default_dp_methods(),
        null_calibration_draws: 200_000,
    }
}

fn in_pool(threads: usize, sc: &DpScenario) -> DpReport {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_dp(sc).unwrap())
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for mode in [SimMode::Full, SimMode::Fast] {
        let sc = small(mode);
        let one = in_pool(1, &sc);
        let three = in_pool(3, &sc);
        assert_eq!(one, three, "{mode:?}");
    }
}

#[test]
fn seed_controls_the_stream() {
    let sc = small(SimMode::Full);
    assert_eq!(run_dp(&sc).unwrap(), run_dp(&sc).unwrap());
    let mut other = sc.clone();
    other.seed += 1;
    assert_ne!(run_dp(&sc).unwrap().rows, run_dp(&other).unwrap().rows);
}

#[test]
fn proportion_positive_is_consistent() {
    for mode in [SimMode::Full, SimMode::Fast] {
        let sc = small(mode);
        let rep = run_dp(&sc).unwrap();
        let s = sc.n_studies() as f64;
        for row in &rep.rows {
            assert!((0.0..=1.0).contains(&row.dp) && (0.0..=1.0).contains(&row.pp));
            match row.avg_tc {
                None => {
                    let want = row.dp * sc.n_disease as f64 / row.t as f64;
                    assert!((row.pp - want).abs() < 1e-15, "{}", row.method);
                }
                Some(tc) => {
                    // Each study contributes T/S distinct SNPs and the union holds at most T.
                    assert!(tc >= row.t as f64 / s - 1e-9 && tc <= row.t as f64, "T={} Tc={tc}", row.t);
                }
            }
            let n = (rep.nsim * rep.n_disease as u64) as f64;
            assert!((row.hits as f64 / n - row.dp).abs() < 1e-15);
        }
        for m in &sc.methods {
            let dps: Vec<f64> = sc.t_list.iter().map(|&t| rep.row(*m, t).unwrap().dp).collect();
            assert!(dps.windows(2).all(|w| w[0] <= w[1]), "{m} {mode:?}: {dps:?}");
        }
    }
}

#[test]
fn null_snps_are_caught_at_the_selection_rate() {
    for mode in [SimMode::Full, SimMode::Fast] {
        let mut sc = small(mode);
        sc.effect = EffectModel::FixedEffect { beta: 0.0 };
        sc.n_disease = 100;
        sc.t_list = vec![400];
        sc.nsim = 40;
        let rep = run_dp(&sc).unwrap();
        let want: f64 = 400.0 / 20_000.0;
        let se = (want * (1.0 - want) / 4000.0).sqrt();
        for row in &rep.rows {
            // The union of three lists of 133 or 134 holds nearly 400 SNPs.
            let expect = if row.method == Method::CombinedList { row.avg_tc.unwrap() / 20_000.0 } else { want };
            assert!((row.dp - expect).abs() < 4.5 * se, "{mode:?} {}: {} vs {expect}", row.method, row.dp);
        }
    }
}

#[test]
fn fast_mode_agrees_with_the_analytic_approximation() {
    let eta = 0.2673;
    let sc = DpScenario {
        designs: StudyDesign::equal(5, 400).unwrap(),
        effect: EffectModel::FixedEffect { beta: 1.3f64.ln() },
        freq_source: AlleleFrequencySource::Fixed { eta },
        n_snps: 500_000,
        n_disease: 1,
        t_list: vec![100, 1000, 10_000],
        nsim: 3000,
        seed: 3,
        sim_mode: SimMode::Fast,
        methods: vec![Method::CombinedList, Method::MetaFixed, Method::SumWald],
        null_calibration_draws: DEFAULT_CALIBRATION_DRAWS,
    };
    let rep = run_dp(&sc).unwrap();
    for row in &rep.rows {
        let want = dp_analytic(row.method, &sc.designs, eta, &sc.effect, row.t, sc.n_snps).unwrap();
        let se = (want * (1.0 - want) / sc.nsim as f64).sqrt().max(1e-3);
        assert!((row.dp - want).abs() < 4.0 * se, "{} T={}: {} vs {want}", row.method, row.t, row.dp);
    }
}
