use super::*;
use crate::rng::Stream;
use crate::signals::Cov2;
use proptest::prelude::*;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

fn g(m: f64, v: f64) -> Distribution1D {
    Distribution1D::gaussian(m, v).unwrap()
}

fn xor(a: f64) -> (Vec<PlanarAtom>, Vec<PlanarAtom>) {
    (
        vec![PlanarAtom::new(a, a, 0.5), PlanarAtom::new(-a, -a, 0.5)],
        vec![PlanarAtom::new(a, -a, 0.5), PlanarAtom::new(-a, a, 0.5)],
    )
}

#[test]
fn w1_location_shift() {
    assert!(w1_quantile_1d(&g(0.0, 1.0), &g(0.0, 1.0)).unwrap().abs() < 1e-12);
    assert!((w1_quantile_1d(&g(0.0, 1.0), &g(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-8);
    // scale change: W₁(N(0,1), N(0,4)) = E|Z|·(2 − 1)
    let v = w1_quantile_1d(&g(0.0, 1.0), &g(0.0, 4.0)).unwrap();
    assert!((v - (2.0 / PI).sqrt()).abs() < 1e-8, "{v}");
}

#[test]
fn w1_empirical_agrees_with_closed_form() {
    let n = 20_000;
    let mut rng = Stream::new(5, 0);
    let a: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let b: Vec<f64> = (0..n).map(|_| 0.5 + 1.3 * rng.normal()).collect();
    let exact = w1_quantile_1d(&g(0.0, 1.0), &g(0.5, 1.69)).unwrap();
    let emp = w1_quantile_1d(&Distribution1D::samples(a.clone()).unwrap(), &Distribution1D::samples(b).unwrap()).unwrap();
    assert!((emp - exact).abs() < 2.0 / (n as f64).sqrt(), "{emp} vs {exact}");
    // mixed atomic/continuous
    let mixed = w1_quantile_1d(&Distribution1D::samples(a).unwrap(), &g(0.5, 1.69)).unwrap();
    assert!((mixed - exact).abs() < 2.0 / (n as f64).sqrt(), "{mixed} vs {exact}");
}

#[test]
fn w1_unequal_sample_sizes() {
    let p = Distribution1D::samples(vec![0.0, 1.0]).unwrap();
    let q = Distribution1D::samples(vec![0.0, 0.5, 1.0]).unwrap();
    // |F_p − F_q| = 1/6 on [0, 0.5) and [0.5, 1)
    assert!((w1_quantile_1d(&p, &q).unwrap() - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn w1_grid_density() {
    // uniform on [0, 1) vs point mass at ½: ∫|x − ½|... = ¼
    let grid = Distribution1D::grid(0.0, 0.01, vec![1.0; 100]).unwrap();
    let pt = Distribution1D::discrete(&[0.5], &[1.0]).unwrap();
    assert!((w1_quantile_1d(&grid, &pt).unwrap() - 0.25).abs() < 1e-9);
    assert!(matches!(Distribution1D::grid(0.0, 0.01, vec![1.1; 100]), Err(OtError::Unnormalized(_))));
}

#[test]
fn xor_pair_transport() {
    let (p, q) = xor(0.35);
    assert!((w1_discrete(&p, &q).unwrap() - 0.70).abs() < 1e-12);
    assert!((w2_discrete(&p, &q).unwrap() - 0.70).abs() < 1e-12);
    assert_eq!(w1_discrete(&p, &p).unwrap(), 0.0);
    // the two deterministic couplings are the extreme points here
    let d = |x: [f64; 2], y: [f64; 2]| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
    let c1 = 0.5 * d(p[0].point, q[0].point) + 0.5 * d(p[1].point, q[1].point);
    let c2 = 0.5 * d(p[0].point, q[1].point) + 0.5 * d(p[1].point, q[0].point);
    assert!((w1_discrete(&p, &q).unwrap() - c1.min(c2)).abs() < 1e-12);
}

#[test]
fn transport_errors() {
    let (p, _) = xor(1.0);
    let q = vec![PlanarAtom::new(0.0, 0.0, 0.9)];
    assert!(matches!(w1_discrete(&p, &q), Err(OtError::MassMismatch(..))));
    let many: Vec<PlanarAtom> = (0..17).map(|i| PlanarAtom::new(i as f64, 0.0, 1.0 / 17.0)).collect();
    assert!(matches!(w1_discrete(&many, &many), Err(OtError::TooManyAtoms(17, 16))));
}

#[test]
fn transport_matches_assignment_brute_force() {
    // uniform weights: optimum is a permutation
    let mut rng = Stream::new(3, 0);
    for _ in 0..20 {
        let n = 5;
        let p: Vec<PlanarAtom> = (0..n).map(|_| PlanarAtom::new(rng.normal(), rng.normal(), 0.2)).collect();
        let q: Vec<PlanarAtom> = (0..n).map(|_| PlanarAtom::new(rng.normal(), rng.normal(), 0.2)).collect();
        let mut best = f64::INFINITY;
        let mut perm: Vec<usize> = (0..n).collect();
        permute(&mut perm, 0, &mut |pi| {
            let c: f64 = pi.iter().enumerate().map(|(i, &j)| {
                let (a, b) = (p[i].point, q[j].point);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            }).sum::<f64>() * 0.2;
            best = best.min(c);
        });
        assert!((w1_discrete(&p, &q).unwrap() - best).abs() < 1e-12);
    }
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[test]
fn w2_gaussian_hiding_pair() {
    let c = 0.6;
    let (sp, sm) = (Cov2::new(1.0, 1.0, c), Cov2::new(1.0, 1.0, -c));
    let w = w2_gaussian([0.0; 2], &sp, [0.0; 2], &sm).unwrap();
    // shared eigenbasis: W₂² = Σ(√λ − √μ)² = 4(1 − √(1 − c²))
    let oracle = (2.0 * ((1.0f64 + c).sqrt() - (1.0f64 - c).sqrt()).powi(2)).sqrt();
    assert!((w - 0.8f64.sqrt()).abs() < 1e-12, "{w}");
    assert!((w - oracle).abs() < 1e-12);
    assert!(w2_gaussian([0.0; 2], &sp, [0.0; 2], &sp).unwrap() < 1e-7);
    let small = w2_gaussian([0.0; 2], &Cov2::new(1.0, 1.0, 0.05), [0.0; 2], &Cov2::new(1.0, 1.0, -0.05)).unwrap();
    assert!((small / (SQRT_2 * 0.05) - 1.0).abs() < 0.05);
    assert!(matches!(w2_gaussian([0.0; 2], &Cov2::new(1.0, 1.0, 2.0), [0.0; 2], &sp), Err(OtError::NotPsd)));
    // pure translation
    let t = w2_gaussian([0.0, 0.0], &sp, [3.0, 4.0], &sp).unwrap();
    assert!((t - 5.0).abs() < 1e-7);
}

#[test]
fn sliced_w1_is_blind_on_axes() {
    let (p, q) = xor(0.35);
    let (p, q) = (PlanarLaw::Atoms(p), PlanarLaw::Atoms(q));
    assert!(sliced_w1(&p, &q, &[0.0, FRAC_PI_2]).unwrap().abs() < 1e-15);
    let dense: Vec<f64> = (0..64).map(|k| k as f64 * PI / 64.0).collect();
    assert!(sliced_w1(&p, &q, &dense).unwrap() > 0.01);
    assert_eq!(sliced_w1(&p, &p, &dense).unwrap(), 0.0);
    assert!(sliced_w1(&p, &q, &[]).is_err());
}

#[test]
fn tv_basics() {
    assert_eq!(tv_1d(&g(0.0, 1.0), &g(0.0, 1.0)).unwrap(), 0.0);
    // N(0,1) vs N(1,1): 2Φ(½) − 1
    let v = tv_1d(&g(0.0, 1.0), &g(1.0, 1.0)).unwrap();
    assert!((v - 0.382_924_922_548_026).abs() < 1e-8, "{v}");
    assert!(matches!(tv_1d(&Distribution1D::samples(vec![0.0]).unwrap(), &g(0.0, 1.0)), Err(OtError::NoDensity(_))));
    for (v0, v1) in [(1.0, 1.2), (0.3, 2.0), (0.04536, 0.06)] {
        let closed = tv_centered_gaussians(v0, v1);
        assert!((closed - tv_1d(&g(0.0, v0), &g(0.0, v1)).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn tv_pinsker_against_gaussian_kl() {
    for (v, eps) in [(1.0, 0.05), (0.2, 0.01), (0.5, 0.2)] {
        let tv = tv_1d(&g(0.0, v), &g(0.0, v + 2.0 * eps)).unwrap();
        let kl = kl_gaussian_variance(v, v + 2.0 * eps).unwrap();
        assert!(tv * tv <= 0.5 * kl + 1e-12, "{tv} vs {kl}");
    }
}

#[test]
fn tv_mixtures_match_monte_carlo() {
    let (b, eps, nu) = (0.06, 0.01, 0.5 * (-2.4f64).exp());
    let p = Distribution1D::symmetric_mixture(SQRT_2 * b, nu).unwrap();
    let q = Distribution1D::symmetric_mixture(SQRT_2 * (b + eps), nu).unwrap();
    let tv = tv_1d(&p, &q).unwrap();
    // TV = ½·E_p|1 − q(X)/p(X)| over 10⁷ draws from p
    let chunks = 100u64;
    let per = 100_000;
    let total: f64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = Stream::new(77, k);
            let mut acc = crate::stats::Accum::default();
            for _ in 0..per {
                let s = if rng.coin() { 1.0 } else { -1.0 };
                let x = s * SQRT_2 * b + nu.sqrt() * rng.normal();
                acc.add((1.0 - q.pdf(x).unwrap() / p.pdf(x).unwrap()).abs());
            }
            acc.value()
        })
        .sum();
    let mc = 0.5 * total / (chunks as f64 * per as f64);
    assert!((tv - mc).abs() < 1e-3, "{tv} vs {mc}");
}

#[test]
fn kl_values() {
    assert_eq!(kl_gaussian_variance(0.7, 0.7).unwrap(), 0.0);
    let v = kl_gaussian_variance(1.0, 1.2).unwrap();
    assert!((v - 0.5 * (1.0 / 1.2 - 1.0 + 1.2f64.ln())).abs() < 1e-15);
    assert!((v - 0.00783).abs() < 1e-5);
    let s = kl_gaussian_variance(1.0, 1.2).unwrap();
    assert!(0.01 / 1.44 <= s && s <= 0.02);
    assert!(kl_gaussian_variance(0.0, 1.0).is_err());
    assert!(kl_gaussian_variance(1.0, -1.0).is_err());
    assert_eq!(kl_mixture_bound(0.06, 0.0, 0.1), 0.0);
    assert!((kl_mixture_bound(0.06, 0.01, 0.5 * (-2.4f64).exp()) - 2.2046e-3).abs() < 1e-6);
}

#[test]
fn kl_numeric_matches_gaussian_closed_form() {
    let k = kl_1d(&g(0.0, 1.0), &g(0.0, 1.2)).unwrap();
    assert!((k - kl_gaussian_variance(1.0, 1.2).unwrap()).abs() < 1e-8);
}

#[test]
fn kl_mixture_bound_dominates() {
    let mut rng = Stream::new(21, 0);
    for _ in 0..20 {
        let b = 0.01 + 0.5 * rng.uniform();
        let eps = 0.001 + 0.1 * rng.uniform();
        let nu = 0.01 + 0.5 * rng.uniform();
        let p = Distribution1D::symmetric_mixture(SQRT_2 * b, nu).unwrap();
        let q = Distribution1D::symmetric_mixture(SQRT_2 * (b + eps), nu).unwrap();
        let k = kl_1d(&p, &q).unwrap();
        assert!(k <= kl_mixture_bound(b, eps, nu) + 1e-9, "b={b} eps={eps} nu={nu}: {k}");
    }
}

#[test]
fn pinsker_and_lecam() {
    assert_eq!(pinsker(0.0), 0.0);
    assert!((pinsker(0.02) - 0.1).abs() < 1e-15);
    assert_eq!(pinsker(10.0), 1.0);
    assert_eq!(lecam_risk(0.0, 1.0, 1.0), 0.0);
    assert_eq!(lecam_risk(0.0, 1.0, 0.0), 0.25);
    assert_eq!(lecam_risk(0.3, 0.3, 0.1), 0.0);
    assert_eq!(lecam_risk(-1.0, 1.0, 0.25), 0.375);
    assert_eq!(testing_error_floor(0.25), 0.375);
}

#[test]
fn pinsker_chain_constants() {
    // N = v0²/(64ε²) with per-shot KL ≤ 2ε²/v0² gives product TV ≤ 1/8
    let mut rng = Stream::new(4, 0);
    for _ in 0..10 {
        let v0 = 0.1 + rng.uniform();
        let eps = v0 * (0.01 + 0.4 * rng.uniform());
        let n = (v0 * v0 / (64.0 * eps * eps)).floor();
        let kl = kl_gaussian_variance(v0, v0 + 2.0 * eps).unwrap();
        assert!(kl <= 2.0 * eps * eps / (v0 * v0));
        let tv = pinsker(n * kl);
        assert!(tv <= 0.25);
        assert!(testing_error_floor(tv) >= 0.375);
    }
}

#[test]
fn modulus_gaussian_hiding() {
    let fam = ModulusFamily::GaussianGrid { sigma_x2: vec![1.0], sigma_p2: vec![1.0], c: vec![-0.6, -0.3, 0.0, 0.3, 0.6] };
    let meas = ModulusMeasurement { angles: vec![0.0, FRAC_PI_2], r: 1.0 };
    let b = ambiguity_modulus(&fam, &meas, 0.0, 10_000).unwrap();
    // witness is (Σ₋, Σ₊): √(2/π)(√1.6 − √0.4) at 45°
    let want = (2.0 / PI).sqrt() * (1.6f64.sqrt() - 0.4f64.sqrt());
    assert!((b.lower - want).abs() < 1e-9, "{b:?}");
    assert!(b.upper >= b.lower);
    assert!((b.upper - 0.8f64.sqrt()).abs() < 1e-9);
    let cs = (b.witness_params.0[2], b.witness_params.1[2]);
    assert!((cs.0 - cs.1).abs() == 1.2, "{cs:?}");
    let j = b.to_json();
    assert!(j.get("witness_params").is_some() && j.get("eta").is_some());
}

#[test]
fn modulus_gaussian_with_full_angles_is_identifiable() {
    let fam = ModulusFamily::GaussianGrid { sigma_x2: vec![1.0], sigma_p2: vec![1.0], c: vec![-0.6, 0.6] };
    let meas = ModulusMeasurement { angles: vec![0.0, FRAC_PI_2, PI / 4.0], r: 1.0 };
    let b = ambiguity_modulus(&fam, &meas, 0.0, 100).unwrap();
    assert_eq!(b.lower, 0.0);
}

#[test]
fn modulus_delta_family() {
    let meas = ModulusMeasurement { angles: vec![0.0, FRAC_PI_2], r: 1.2 };
    let fam = ModulusFamily::DeltaGrid { a: vec![0.3, 0.5], b: vec![0.1, 0.2], eps: vec![0.0, 0.05] };
    let b = ambiguity_modulus(&fam, &meas, 0.0, 10_000).unwrap();
    assert!(b.lower >= 2.0 * 0.1 - 1e-12, "{b:?}");
    assert!(b.upper >= b.lower);
    let forced = ModulusFamily::DeltaGrid { a: vec![0.5], b: vec![0.2], eps: vec![1.0] };
    let b = ambiguity_modulus(&forced, &meas, 0.0, 10_000).unwrap();
    assert_eq!((b.lower, b.upper), (0.0, 0.0));
    assert_eq!(b.witness_params.0, b.witness_params.1);
}

#[test]
fn modulus_rejects_bad_input() {
    let meas = ModulusMeasurement { angles: vec![0.0], r: 1.0 };
    let fam = ModulusFamily::GaussianGrid { sigma_x2: vec![], sigma_p2: vec![1.0], c: vec![0.0] };
    assert!(ambiguity_modulus(&fam, &meas, 0.0, 10).is_err());
    let fam = ModulusFamily::GaussianGrid { sigma_x2: vec![0.1], sigma_p2: vec![0.1], c: vec![5.0] };
    assert!(matches!(ambiguity_modulus(&fam, &meas, 0.0, 10), Err(OtError::EmptyFeasible(_))));
    let fam = ModulusFamily::GaussianGrid { sigma_x2: vec![1.0], sigma_p2: vec![1.0], c: vec![0.0] };
    assert!(ambiguity_modulus(&fam, &meas, -1.0, 10).is_err());
    assert!(ambiguity_modulus(&fam, &meas, 0.0, 0).is_err());
}

fn atoms_strategy() -> impl Strategy<Value = Vec<PlanarAtom>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.05f64..1.0), 1..6).prop_map(|v| {
        let total: f64 = v.iter().map(|a| a.2).sum();
        v.into_iter().map(|(x, p, w)| PlanarAtom::new(x, p, w / total)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sliced_is_contraction(p in atoms_strategy(), q in atoms_strategy(), n in 1usize..12) {
        let angles: Vec<f64> = (0..n).map(|k| k as f64 * PI / n as f64).collect();
        let s = sliced_w1(&PlanarLaw::Atoms(p.clone()), &PlanarLaw::Atoms(q.clone()), &angles).unwrap();
        prop_assert!(s <= w1_discrete(&p, &q).unwrap() + 1e-9);
    }

    #[test]
    fn w1_symmetric_and_triangle(p in atoms_strategy(), q in atoms_strategy(), r in atoms_strategy()) {
        let (a, b, c) = (w1_discrete(&p, &q).unwrap(), w1_discrete(&q, &p).unwrap(), w1_discrete(&p, &r).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(c <= a + w1_discrete(&q, &r).unwrap() + 1e-12);
        prop_assert!(a <= w2_discrete(&p, &q).unwrap() + 1e-12);
    }

    #[test]
    fn duality_spot_check(p in atoms_strategy(), q in atoms_strategy(), knots in prop::collection::vec(-1.0f64..1.0, 2..6), theta in 0.0..PI) {
        // 1-Lipschitz f(x) = h(uᵀx) with h piecewise linear, slopes in [−1, 1]
        let u = [theta.cos(), theta.sin()];
        let h = |t: f64| knots.iter().enumerate().map(|(i, s)| s * (t - (i as f64 - 2.0)).max(0.0) / knots.len() as f64).sum::<f64>();
        let ef = |a: &[PlanarAtom]| a.iter().map(|a| a.weight * h(u[0] * a.point[0] + u[1] * a.point[1])).sum::<f64>();
        prop_assert!((ef(&p) - ef(&q)).abs() <= w1_discrete(&p, &q).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn convolution_contracts(xs in prop::collection::vec(-3.0f64..3.0, 1..8), ys in prop::collection::vec(-3.0f64..3.0, 1..8), v in 0.01f64..2.0) {
        let p = Distribution1D::samples(xs).unwrap();
        let q = Distribution1D::samples(ys).unwrap();
        let before = w1_quantile_1d(&p, &q).unwrap();
        let after = w1_quantile_1d(&p.convolve_gaussian(v).unwrap(), &q.convolve_gaussian(v).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-8, "{} > {}", after, before);
    }

    #[test]
    fn w1_1d_symmetric(m0 in -2.0f64..2.0, v0 in 0.1f64..3.0, m1 in -2.0f64..2.0, v1 in 0.1f64..3.0) {
        let (p, q) = (g(m0, v0), g(m1, v1));
        let a = w1_quantile_1d(&p, &q).unwrap();
        prop_assert!((a - w1_quantile_1d(&q, &p).unwrap()).abs() < 1e-9);
        prop_assert!(a + 1e-9 >= (m0 - m1).abs());
    }
}
