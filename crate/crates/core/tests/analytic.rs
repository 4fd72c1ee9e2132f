use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use qcascade_core::analytic::*;
use qcascade_core::cascade::*;
use qcascade_core::quadrature::{integrate_r, GridSpec};
use qcascade_core::spectra::{CorrelationClass, ExchangeSymmetry, JointSpectrum};

const SYM: ExchangeSymmetry = ExchangeSymmetry::Symmetric;
const ANTI: ExchangeSymmetry = ExchangeSymmetry::Antisymmetric;

fn term(n: i64, d: i64, plus: &str, minus: &str, n_delays: usize) -> CosTerm {
    CosTerm::parse(Ratio::new(n, d), plus, minus, n_delays).unwrap()
}

fn model(n_delays: usize, terms: &[(i64, i64, &str, &str)]) -> AnalyticModel {
    AnalyticModel::from_terms(
        n_delays,
        SYM,
        terms.iter().map(|&(n, d, p, m)| term(n, d, p, m, n_delays)),
    )
}

fn derived(p: Preset, s: ExchangeSymmetry) -> AnalyticModel {
    expand(&compose(&p.config()), s)
}

// Hand-transcribed reference models, written as (numerator, denominator,
// g₊ argument, g₋ argument).

fn homi_reference() -> AnalyticModel {
    model(1, &[(1, 1, "0", "0"), (-1, 1, "0", "t1")])
}

fn noon_reference() -> AnalyticModel {
    model(1, &[(1, 1, "0", "0"), (1, 1, "t1", "0")])
}

fn two_param_11_reference() -> AnalyticModel {
    model(
        2,
        &[
            (1, 1, "0", "0"),
            (1, 2, "t2", "t1"),
            (1, 2, "0", "t2"),
            (1, 2, "t2", "0"),
            (-1, 4, "0", "t1+t2"),
            (-1, 4, "0", "t1-t2"),
        ],
    )
}

fn two_param_2002_reference() -> AnalyticModel {
    model(
        2,
        &[
            (1, 1, "0", "0"),
            (-1, 2, "t1", "t2"),
            (-1, 2, "t2", "0"),
            (-1, 2, "0", "t2"),
            (1, 4, "t2+t1", "0"),
            (1, 4, "t2-t1", "0"),
        ],
    )
}

fn three_param_11_reference() -> AnalyticModel {
    model(
        3,
        &[
            (1, 1, "0", "0"),
            // h1
            (-1, 2, "t3", "t1"),
            (-1, 4, "0", "t1+t3"),
            (-1, 4, "0", "t1-t3"),
            // h2
            (-1, 4, "t3", "t2"),
            (-1, 4, "t2", "t3"),
            (1, 8, "0", "t2+t3"),
            (1, 8, "0", "t2-t3"),
            (1, 8, "t2+t3", "0"),
            (1, 8, "t2-t3", "0"),
            // h3
            (1, 8, "t3", "t1+t2"),
            (1, 8, "t3", "t1-t2"),
            (1, 8, "t2+t3", "t1"),
            (1, 8, "t2-t3", "t1"),
            (-1, 16, "0", "t1+t2+t3"),
            (-1, 16, "0", "t1-t2-t3"),
            (-1, 16, "0", "t1+t2-t3"),
            (-1, 16, "0", "t1-t2+t3"),
            // h4
            (-1, 8, "t2", "t1+t3"),
            (-1, 8, "t2", "t1-t3"),
            (1, 4, "t2/2", "t1-t3+t2/2"),
            (1, 4, "t2/2", "t1-t3-t2/2"),
            (-1, 4, "t2/2", "t1+t3+t2/2"),
            (-1, 4, "t2/2", "t1+t3-t2/2"),
            // h5
            (1, 4, "t3-t2/2", "t1+t2/2"),
            (-1, 4, "t3-t2/2", "t1-t2/2"),
            (1, 4, "t3+t2/2", "t1-t2/2"),
            (-1, 4, "t3+t2/2", "t1+t2/2"),
        ],
    )
}

fn three_param_simplified_reference() -> AnalyticModel {
    model(
        3,
        &[
            (1, 1, "0", "0"),
            (-1, 4, "0", "t3+t1"),
            (-1, 4, "0", "t3-t1"),
            (1, 8, "0", "t3+t2"),
            (1, 8, "t3+t2", "0"),
            (1, 8, "0", "t3-t2"),
            (1, 8, "t3-t2", "0"),
            (-1, 16, "0", "t3+t1+t2"),
            (-1, 16, "0", "t3-t1-t2"),
            (-1, 16, "0", "t3+t1-t2"),
            (-1, 16, "0", "t3-t1+t2"),
        ],
    )
}

#[test]
fn one_parameter_models() {
    assert_eq!(derived(Preset::Homi, SYM), homi_reference());
    assert_eq!(derived(Preset::Noon, SYM), noon_reference());
}

#[test]
fn two_parameter_models() {
    assert_eq!(derived(Preset::TwoParam11, SYM), two_param_11_reference());
    assert_eq!(derived(Preset::TwoParam2002, SYM), two_param_2002_reference());
}

#[test]
fn three_parameter_full_model_has_28_terms() {
    let m = derived(Preset::ThreeParam11, SYM);
    let reference = three_param_11_reference();
    assert_eq!(reference.len(), 28);
    assert_eq!(m.len(), 28);
    assert_eq!(m, reference);
}

#[test]
fn reference_values_at_origin() {
    let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
    assert_eq!(two_param_11_reference().evaluate(&js, &[0.0, 0.0]).unwrap(), 2.0);
    assert_eq!(two_param_2002_reference().evaluate(&js, &[0.0, 0.0]).unwrap(), 0.0);
    let far = three_param_simplified_reference().evaluate(&js, &[8.0, 22.0, 1e4]).unwrap();
    assert_eq!(far, 1.0);
}

fn prune(m: &AnalyticModel, fixed: &[(usize, f64)], swept: usize, js: &JointSpectrum, thr: f64) -> AnalyticModel {
    asymptotic_prune(m, &fixed.iter().cloned().collect::<BTreeMap<_, _>>(), swept, js, thr).unwrap()
}

#[test]
fn pruning_to_the_simplified_three_parameter_model() {
    let full = derived(Preset::ThreeParam11, SYM);
    // Delays of 8 and 22 coherence times of the sum frequency, with the
    // difference-frequency linewidth ten times broader.
    let anti = CorrelationClass::AntiCorrelated.spectrum(SYM);
    let p = prune(&full, &[(0, 80.0), (1, 220.0)], 2, &anti, 1e-6);
    assert_eq!(p, three_param_simplified_reference());
    let broad = JointSpectrum::with_symmetry(1.0, 10.0, SYM, 100.0).unwrap();
    let p = prune(&full, &[(0, 8.0), (1, 22.0)], 2, &broad, 1e-6);
    assert_eq!(p, three_param_simplified_reference());
}

#[test]
fn pruning_keeps_half_delay_products_for_equal_widths() {
    // With σ₊ = σ₋ = 1, τ₁ − τ₂/2 = −3 leaves ±1/4·g₋(τ₁−τ₂/2)g₊(τ₃∓τ₂/2)
    // at a peak of e^{−4.5}/4 ≈ 2.8e-3, far above 1e-6.
    let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
    let full = derived(Preset::ThreeParam11, SYM);
    let p = prune(&full, &[(0, 8.0), (1, 22.0)], 2, &js, 1e-6);
    assert_eq!(p.len(), 13);
    let extra = model(3, &[(-1, 4, "t3-t2/2", "t1-t2/2"), (1, 4, "t3+t2/2", "t1-t2/2")]);
    let mut expected: Vec<CosTerm> = three_param_simplified_reference().terms().to_vec();
    expected.extend(extra.terms().iter().cloned());
    assert_eq!(p, AnalyticModel::from_terms(3, SYM, expected));
    let p = prune(&full, &[(0, 8.0), (1, 22.0)], 2, &js, 1e-2);
    assert_eq!(p, three_param_simplified_reference());
}

#[test]
fn pruning_the_two_parameter_cross_term() {
    let m = two_param_11_reference();
    let cross = term(1, 2, "t2", "t1", 2);
    let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
    // Peak of 1/2·g₋(τ₁)g₊(τ₂) at τ₁ = 5 is e^{−12.5}/2 ≈ 1.9e-6.
    let p = prune(&m, &[(0, 5.0)], 1, &js, 1e-5);
    assert_eq!(p.len(), 5);
    assert!(!p.terms().contains(&cross));
    let p = prune(&m, &[(0, 5.0)], 1, &js, 1e-6);
    assert!(p.terms().contains(&cross));
    let narrow = JointSpectrum::with_symmetry(1.0, 10.0, SYM, 100.0).unwrap();
    let p = prune(&m, &[(0, 5.0)], 1, &narrow, 1e-6);
    assert!(!p.terms().contains(&cross));
    assert_eq!(prune(&m, &[(0, 5.0)], 1, &js, 0.0), m);
}

#[test]
fn swap_rule_pairs() {
    for p in [Preset::Homi, Preset::TwoParam11, Preset::ThreeParam11] {
        let a = derived(p, SYM);
        let b = derived(p.partner(), SYM);
        assert_eq!(swap_rule(&a), b, "{p}");
        assert_eq!(swap_rule(&b), a, "{p}");
        assert_eq!(swap_rule(&swap_rule(&a)), a);
    }
    assert_eq!(swap_rule(&homi_reference()), noon_reference());
    assert_eq!(swap_rule(&two_param_11_reference()), two_param_2002_reference());
}

#[test]
fn antisymmetric_inputs_do_not_distinguish_partners() {
    for p in [Preset::Homi, Preset::TwoParam11, Preset::ThreeParam11] {
        let a = compose(&p.config());
        let b = compose(&p.partner().config());
        assert!(antisymmetric_equivalence_check(&a, &b), "{p}");
        assert_ne!(expand(&a, SYM), expand(&b, SYM), "{p}");
    }
}

#[test]
fn parity_laws_as_term_identities() {
    for sym in ExchangeSymmetry::BOTH {
        for (live, direct, shifted) in [
            (1, Preset::Homi, Preset::Noon),
            (2, Preset::TwoParam11, Preset::TwoParam2002),
            (3, Preset::ThreeParam11, Preset::ThreeParam2002),
        ] {
            for n in live..=live + 3 {
                let m = expand(&compose(&CascadeConfig::trailing_delays(n, live).unwrap()), sym);
                let reference = derived(if (n - live) % 2 == 0 { direct } else { shifted }, sym);
                assert_eq!(m, reference, "{live} delays, {n} stages, {sym:?}");
            }
        }
    }
}

#[test]
fn two_parameter_model_reduces_to_noon_at_zero_first_delay() {
    let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
    let m = derived(Preset::TwoParam11, SYM);
    let noon = derived(Preset::Noon, SYM);
    for k in 0..=400 {
        let t = -10.0 + 0.05 * k as f64;
        let a = m.evaluate(&js, &[0.0, t]).unwrap();
        let b = noon.evaluate(&js, &[t]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn half_integer_closure() {
    for stages in 1..=4 {
        for live in 1..=stages.min(4) {
            let tm = compose(&CascadeConfig::trailing_delays(stages, live).unwrap());
            for sym in ExchangeSymmetry::BOTH {
                for t in expand(&tm, sym).terms() {
                    for c in t.plus_arg.coefficients().iter().chain(t.minus_arg.coefficients()) {
                        assert!((c * Ratio::from_integer(2)).is_integer());
                    }
                }
            }
        }
    }
}

#[test]
fn four_delay_cascade_has_weak_outer_structures() {
    // Sweeping τ₄ with the other delays fixed, a term produces a structure
    // only when one argument is free of τ₄ and vanishes identically; the
    // structure then sits where the other argument is zero.
    let m = expand(&compose(&CascadeConfig::trailing_delays(4, 4).unwrap()), SYM);
    let fixed = [8.0, 22.0, 57.0];
    let mut structures: BTreeMap<i64, f64> = BTreeMap::new();
    for t in m.terms() {
        let (live, other) = match (t.plus_arg.is_zero(), t.minus_arg.is_zero()) {
            (true, false) => (&t.minus_arg, &t.plus_arg),
            (false, true) => (&t.plus_arg, &t.minus_arg),
            _ => continue,
        };
        assert!(other.is_zero());
        let slope = live.coefficient(3);
        if slope == 0.0 {
            continue;
        }
        let offset: f64 = (0..3).map(|i| live.coefficient(i) * fixed[i]).sum();
        let center = -offset / slope;
        *structures.entry((center * 1e6).round() as i64).or_default() += t.coeff.to_f64().unwrap().abs();
    }
    let outermost = structures.keys().map(|k| k.abs()).max().unwrap();
    let visibility = structures
        .iter()
        .filter(|(k, _)| k.abs() == outermost)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    assert!((outermost as f64 * 1e-6 - 87.0).abs() < 1e-6);
    assert!(visibility <= 1.0 / 32.0 + 1e-6, "{visibility}");
}

#[test]
fn single_delay_placements() {
    use SingleDelayOutcome::*;
    assert_eq!(classify_single_delay(1, Placement::Stage(0), SYM).unwrap(), Homi);
    assert_eq!(classify_single_delay(2, Placement::Stage(1), SYM).unwrap(), Noon);
    assert_eq!(classify_single_delay(2, Placement::Input, SYM).unwrap(), Constant(Ratio::from_integer(1)));
    assert_eq!(classify_single_delay(2, Placement::Stage(0), SYM).unwrap(), Constant(Ratio::from_integer(1)));
    assert!(classify_single_delay(2, Placement::Stage(2), SYM).is_err());
}

#[test]
fn renderer_output() {
    assert_eq!(derived(Preset::Homi, SYM).to_string(), "1 − g₋(τ₁)");
    assert_eq!(derived(Preset::Noon, SYM).to_string(), "1 + g₊(τ₁)");
    let latex = derived(Preset::TwoParam2002, SYM).render(Notation::Latex);
    assert!(latex.contains("\\frac{1}{2}g_+(\\tau_1)g_-(\\tau_2)"), "{latex}");
}

#[test]
fn repeated_delay_overshoots_two() {
    let m = expand(&compose(&CascadeConfig::from_labels(&[Some(0), Some(0)], 1).unwrap()), SYM);
    let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
    assert!((m.evaluate(&js, &[0.0]).unwrap() - 8.0 / 3.0).abs() < 1e-12);
}

#[test]
fn normalization_metadata() {
    let m = derived(Preset::Homi, SYM);
    assert_eq!(m.raw_constant(), Ratio::from_integer(2));
    // 1/2·(1 − g₋): the unnormalized dip level far from zero delay is 1/2.
    assert!((m.unnormalized_scale() - 0.5).abs() < 1e-15);
    assert_eq!(m.constant(), Ratio::from_integer(1));
}

#[test]
fn cancelled_pair_amplitude_gives_empty_model() {
    // One bare stage with a symmetric pair: both photons always bunch.
    let tm = compose(&CascadeConfig::from_labels(&[None], 1).unwrap());
    let m = expand(&tm, SYM);
    assert!(m.is_empty());
    assert!(m.raw_constant().is_zero());
}

fn arbitrary_cascade() -> impl Strategy<Value = (Vec<Option<usize>>, usize)> {
    (1usize..=3).prop_flat_map(|n| (prop::collection::vec(prop::option::of(0..n), 1..=4), Just(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_matches_quadrature_for_small_cascades(
        (labels, n) in arbitrary_cascade(),
        raw in prop::collection::vec(-10.0f64..10.0, 3),
        anti in any::<bool>(),
        class in prop::sample::select(CorrelationClass::ALL.to_vec()),
    ) {
        let sym = if anti { ANTI } else { SYM };
        let js = class.spectrum(sym);
        let tm = compose(&CascadeConfig::from_labels(&labels, n).unwrap());
        let taus = &raw[..n];
        let a = expand(&tm, sym).evaluate(&js, taus).unwrap();
        let q = integrate_r(&tm, &js, taus, &GridSpec::resolving(&tm, &js, taus)).unwrap();
        prop_assert!((a - q).abs() <= 1e-6, "{labels:?} {taus:?}: {a} vs {q}");
    }

    #[test]
    fn models_stay_in_range(
        (labels, n) in arbitrary_cascade(),
        raw in prop::collection::vec(-10.0f64..10.0, 3),
        anti in any::<bool>(),
        class in prop::sample::select(CorrelationClass::ALL.to_vec()),
    ) {
        // With one stage per delay; two stages sharing a delay can overshoot 2
        // (e.g. 8/3 at the origin).
        let mut used: Vec<usize> = labels.iter().flatten().cloned().collect();
        used.sort();
        let before = used.len();
        used.dedup();
        prop_assume!(used.len() == before);
        let sym = if anti { ANTI } else { SYM };
        let js = class.spectrum(sym);
        let m = expand(&compose(&CascadeConfig::from_labels(&labels, n).unwrap()), sym);
        let v = m.evaluate(&js, &raw[..n]).unwrap();
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&v), "{v}");
        let far: Vec<f64> = [1.0e4, 3.3e4 * 2f64.sqrt(), 1.7e5 * 3f64.sqrt()][..n].to_vec();
        let c = m.constant().to_f64().unwrap();
        prop_assert!((m.evaluate(&js, &far).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn swap_rule_is_an_involution(
        (labels, n) in arbitrary_cascade(),
        anti in any::<bool>(),
    ) {
        let sym = if anti { ANTI } else { SYM };
        let m = expand(&compose(&CascadeConfig::from_labels(&labels, n).unwrap()), sym);
        prop_assert_eq!(swap_rule(&swap_rule(&m)), m);
    }
}
