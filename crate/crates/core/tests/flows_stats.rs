//! Distributional checks of the sphere flows against independent oracles.

use rqf_core::diagnostics::{attractor_detect, ks_critical_value, ks_two_sample, sync_metric, MeanEstimate};
use rqf_core::flows::{
    coupled_endpoints, evolve_observed, fibonacci_sphere, pullback_run, simulate_phase, uniform_sphere_points, Dynamics,
    TimeGrid,
};
use rqf_core::geometry::UnitVector;
use rqf_core::noise::{NoiseKey, NoiseStream};
use rqf_core::parallel::map_replicates;

fn e(n: usize, i: usize) -> UnitVector {
    UnitVector::basis(n, i).unwrap()
}

fn finals(initials: &[UnitVector], t: f64, dt: f64, seed: u64, count: usize, dynamics: Dynamics) -> Vec<Vec<UnitVector>> {
    map_replicates(count, |i| coupled_endpoints(initials, t, dt, NoiseKey::replicate(seed, i), dynamics).map(|e| e.states))
        .unwrap()
}

#[test]
fn one_point_law_is_brownian_motion_at_half_speed() {
    let (dt, count) = (1e-3, 4000);
    let x0 = e(3, 0);
    let rqf: Vec<f64> = finals(std::slice::from_ref(&x0), 1.0, dt, 1, count, Dynamics::default())
        .iter()
        .map(|s| s[0].as_slice()[0])
        .collect();
    let bm: Vec<f64> = finals(&[x0], 0.5, dt, 2, count, Dynamics::Bias { sigma_q: 0.0, sigma_w: 1.0 })
        .iter()
        .map(|s| s[0].as_slice()[0])
        .collect();
    let ks = ks_two_sample(&rqf, &bm).unwrap();
    assert!(ks.statistic < ks_critical_value(count, count, 0.01), "{ks:?}");
    // E<X_t, x0> = exp(−(n−1)t/4) for the generator ¼Δ
    let m = MeanEstimate::of(&rqf);
    assert!(m.within((-0.5f64).exp(), 3.0), "{m:?}");
}

#[test]
fn long_run_covariance_is_isotropic() {
    let count = 10_000;
    let xs = finals(&[e(3, 0)], 30.0, 2e-2, 3, count, Dynamics::default());
    // oracle: the same statistic from exact uniform samples sets the scale
    for i in 0..3 {
        for j in i..3 {
            let v: Vec<f64> = xs.iter().map(|s| s[0].as_slice()[i] * s[0].as_slice()[j]).collect();
            let m = MeanEstimate::of(&v);
            let target = if i == j { 1.0 / 3.0 } else { 0.0 };
            assert!(m.within(target, 3.0), "entry ({i},{j}): {m:?}");
        }
    }
    let exact = uniform_sphere_points(3, count, 4).unwrap();
    let v: Vec<f64> = exact.iter().map(|x| x.as_slice()[0].powi(2)).collect();
    assert!(MeanEstimate::of(&v).within(1.0 / 3.0, 3.0));
}

#[test]
fn orthogonal_pairs_synchronize() {
    let count = 2000;
    let runs = finals(&[e(3, 0), e(3, 1)], 20.0, 1e-3, 5, count, Dynamics::default());
    let synced = runs.iter().filter(|s| s[0].dot(&s[1]).unwrap().abs() > 0.999).count();
    assert!(synced as f64 >= 0.99 * count as f64, "{synced} of {count}");
}

#[test]
fn phase_model_matches_circle_flow() {
    let (dt, count) = (1e-3, 5000);
    let starts = uniform_sphere_points(2, count, 6).unwrap();
    let circle: Vec<f64> = map_replicates(count, |i| {
        let x0 = &starts[i as usize];
        coupled_endpoints(std::slice::from_ref(x0), 1.0, dt, NoiseKey::replicate(7, i), Dynamics::default())
            .map(|e| e.states[0].angle())
    })
    .unwrap();
    let phase: Vec<f64> = map_replicates(count, |i| {
        let phi0 = starts[i as usize].angle();
        simulate_phase(phi0, 1.0, dt, NoiseKey::replicate(7, i)).map(|p| *p.angles.last().unwrap())
    })
    .unwrap();
    let ks = ks_two_sample(&circle, &phase).unwrap();
    assert!(ks.statistic < ks_critical_value(count, count, 0.01), "{ks:?}");
}

#[test]
fn pullback_single_run_is_bipolar() {
    let r = pullback_run(&fibonacci_sphere(100), 15.0, 1e-3, 1, 1e-3).unwrap();
    assert_eq!(r.summary.k, 2, "{:?}", r.summary);
    assert!(r.summary.max_diameter() < 1e-3);
    assert!(r.summary.pole_inner_product().unwrap() < -0.999);
}

#[test]
fn cluster_masses_split_evenly_on_random_grids() {
    let count = 500;
    let masses = map_replicates(count, |i| {
        let grid = uniform_sphere_points(3, 100, NoiseKey::replicate(8, i))?;
        let ends = coupled_endpoints(&grid, 15.0, 1e-2, NoiseKey::replicate(9, i), Dynamics::default())?;
        attractor_detect(&ends.states, 0.1).map(|s| s.masses[0])
    })
    .unwrap();
    let m = MeanEstimate::of(&masses);
    assert!(m.within(0.5, 3.0), "{m:?}");
}

#[test]
fn synchronization_is_monotone_in_law() {
    let (dt, count, checkpoints) = (2e-3, 2000, 10);
    let steps = TimeGrid::new(5.0, dt).unwrap().steps;
    let every = steps / checkpoints;
    let x = UnitVector::new(vec![1.0, 0.2, -0.3]).unwrap();
    let y = UnitVector::new(vec![-0.1, 1.0, 0.4]).unwrap();
    let paths = map_replicates(count, |i| {
        let src = NoiseStream::new(NoiseKey::replicate(10, i), 3, dt)?;
        let mut out = vec![sync_metric(&x, &y)?];
        evolve_observed(&src, Dynamics::default(), &[x.clone(), y.clone()], steps, |k, _, s| {
            if k % every == 0 {
                let a = UnitVector::new(s[0].clone()).unwrap();
                let b = UnitVector::new(s[1].clone()).unwrap();
                out.push(sync_metric(&a, &b).unwrap());
            }
        })?;
        Ok(out)
    })
    .unwrap();
    let stats: Vec<MeanEstimate> = (0..=checkpoints)
        .map(|c| MeanEstimate::of(&paths.iter().map(|p| p[c]).collect::<Vec<_>>()))
        .collect();
    for w in stats.windows(2) {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].mean <= w[0].mean + 3.0 * se, "{stats:?}");
    }
    assert!(stats[checkpoints].mean < stats[0].mean);
}

#[test]
fn inner_product_law_is_dimension_free() {
    let (dt, count) = (1e-3, 5000);
    let z = |n: usize, seed: u64| -> Vec<f64> {
        finals(&[e(n, 0), e(n, 1)], 1.0, dt, seed, count, Dynamics::default())
            .iter()
            .map(|s| s[0].dot(&s[1]).unwrap())
            .collect()
    };
    let ks = ks_two_sample(&z(2, 11), &z(5, 12)).unwrap();
    assert!(ks.statistic < ks_critical_value(count, count, 0.01), "{ks:?}");
}

#[test]
fn pure_bias_pairs_collapse_to_one_point() {
    let count = 1000;
    let runs = finals(&[e(3, 0), e(3, 1)], 20.0, 1e-3, 13, count, Dynamics::Bias { sigma_q: 0.0, sigma_w: 1.0 });
    let close = runs.iter().filter(|s| s[0].dot(&s[1]).unwrap() > (0.01f64).cos()).count();
    assert!(close as f64 >= 0.95 * count as f64, "{close}");
}

#[test]
fn one_step_moments_converge_at_second_order() {
    // exact moments for the generator ¼Δ on S²: E X_t = x0 e^{−t/2},
    // E X_t X_tᵀ = I/3 + (x0 x0ᵀ − I/3) e^{−3t/2}
    let count = 100_000;
    let x0 = UnitVector::new(vec![0.6, 0.0, 0.8]).unwrap();
    let x = x0.as_slice();
    let steps = [0.2, 0.1, 0.05, 0.025];
    let mut errors = Vec::new();
    for (s, &h) in steps.iter().enumerate() {
        let ends = finals(std::slice::from_ref(&x0), h, h, 20 + s as u64, count, Dynamics::default());
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for e in &ends {
            let d: Vec<f64> = e[0].as_slice().iter().zip(x).map(|(a, b)| a - b).collect();
            for i in 0..3 {
                mean[i] += d[i] / count as f64;
                for j in 0..3 {
                    second[i][j] += d[i] * d[j] / count as f64;
                }
            }
        }
        let (decay1, decay2) = ((-h / 2.0f64).exp(), (-1.5 * h).exp());
        let mut err: f64 = 0.0;
        for i in 0..3 {
            let m_i = x[i] * decay1;
            err = err.max((mean[i] - (m_i - x[i])).abs());
            for j in 0..3 {
                let delta = if i == j { 1.0 / 3.0 } else { 0.0 };
                let xx = delta + (x[i] * x[j] - delta) * decay2;
                let exact = xx - m_i * x[j] - x[i] * x[j] * decay1 + x[i] * x[j];
                err = err.max((second[i][j] - exact).abs());
            }
        }
        errors.push(err);
    }
    let lx: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 4.0, ly.iter().sum::<f64>() / 4.0);
    let slope = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!(slope >= 1.4, "slope {slope}, errors {errors:?}");
}
