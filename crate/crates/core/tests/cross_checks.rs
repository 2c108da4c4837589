//! Agreement between independent routes to the same quantity.

use mgpath::black_scholes::bs_price;
use mgpath::kernel::KernelSpec;
use mgpath::mean_path::{price_mean_path, QuadSpec, SigmaStarReading};
use mgpath::mg_alpha1::{kernel_estimate_alpha1, price_alpha1, price_alpha1_with};
use mgpath::mg_general::price_general;
use mgpath::sde_oracle::{discounted_spot_mean, hull_white_mixing_price, price_oracle};
use mgpath::{Error, GridSpec, MCSpec, MGParams, MarketParams, ReferenceMeasure, VariantMode};

fn market() -> MarketParams {
    MarketParams::new(100.0, 100.0, 0.05, 1.0)
}

fn grid() -> GridSpec {
    GridSpec::new(1.0, 64).unwrap()
}

#[test]
fn general_pricer_reproduces_alpha1_without_correlation() {
    let mg = MGParams::new(0.03, -0.4, 0.3, 1.0, 0.0, 0.04f64.ln());
    let mc = MCSpec::new(5_000, 11);
    let a = price_alpha1(&market(), &mg, &grid(), &mc, VariantMode::Exact).unwrap();
    let b = price_general(&market(), &mg, &grid(), &mc, VariantMode::Exact).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reference_measures_agree() {
    let mg = MGParams::new(0.05, -0.5, 0.3, 1.0, -0.5, 0.04f64.ln());
    let drifted = price_alpha1_with(&market(), &mg, &grid(), &MCSpec::new(50_000, 1), VariantMode::Exact, ReferenceMeasure::Drifted).unwrap();
    let gaussian =
        price_alpha1_with(&market(), &mg, &grid(), &MCSpec::new(50_000, 2), VariantMode::Exact, ReferenceMeasure::Gaussian).unwrap();
    assert!(drifted.z_score(&gaussian) < 4.0, "{drifted:?} {gaussian:?}");
    // The drifted reference matches the target law far better.
    assert!(drifted.effective_sample_size > gaussian.effective_sample_size);
}

#[test]
fn antithetic_pairs_agree_with_plain_sampling() {
    let mg = MGParams::new(0.0, 0.0, 0.3, 1.0, -0.3, 0.04f64.ln());
    let plain = price_alpha1(&market(), &mg, &grid(), &MCSpec::new(40_000, 3), VariantMode::Exact).unwrap();
    let anti = price_alpha1(&market(), &mg, &grid(), &MCSpec::new(40_000, 4).antithetic(true), VariantMode::Exact).unwrap();
    assert!(plain.z_score(&anti) < 4.0);
}

#[test]
fn kernel_table_prices_the_call() {
    let mg = MGParams::new(0.0, -0.5, 0.3, 1.0, -0.5, 0.04f64.ln());
    let mc = MCSpec::new(20_000, 5);
    let m = market();
    let table = kernel_estimate_alpha1(m.tau, m.rate, &mg, 64, &mc, VariantMode::Exact, &KernelSpec::default()).unwrap();
    let mut integrated = 0.0;
    for iy in 0..table.y0.len() {
        for (ix, x0) in table.x0.iter().enumerate() {
            integrated += table.at(iy, ix) * (m.spot * x0.exp() - m.strike).max(0.0) * table.dx * table.dy;
        }
    }
    let direct = price_alpha1(&m, &mg, &grid(), &mc, VariantMode::Exact).unwrap();
    assert!((integrated / direct.price - 1.0).abs() < 1e-3, "{integrated} vs {}", direct.price);
}

#[test]
fn oracle_is_a_martingale() {
    let mg = MGParams::new(0.05, -0.5, 0.3, 1.0, -0.6, 0.04f64.ln());
    let e = discounted_spot_mean(&market(), &mg, &grid(), &MCSpec::new(50_000, 6)).unwrap();
    assert!((e.price - 100.0).abs() < 3.5 * e.stderr, "{e:?}");
}

#[test]
fn mixing_estimator_matches_oracle() {
    let mg = MGParams::new(0.1, -1.0, 0.4, 1.0, 0.0, 0.04f64.ln());
    let h = hull_white_mixing_price(&market(), &mg, &grid(), &MCSpec::new(30_000, 7)).unwrap();
    let o = price_oracle(&market(), &mg, &grid(), &MCSpec::new(30_000, 8)).unwrap();
    assert!(h.z_score(&o) < 4.0);
    let bad = hull_white_mixing_price(&market(), &MGParams { rho: 0.2, ..mg }, &grid(), &MCSpec::new(10, 0)).unwrap_err();
    assert_eq!(bad.field(), Some("rho"));
}

#[test]
fn small_vol_of_vol_collapses_to_black_scholes() {
    let mg = MGParams::new(0.0, 0.0, 1e-3, 1.0, -0.5, 0.04f64.ln());
    let bs = bs_price(&market(), 0.2).unwrap().price;
    let q = price_mean_path(&market(), &mg, &QuadSpec::default(), SigmaStarReading::Variance).unwrap();
    assert!((q.price / bs - 1.0).abs() < 1e-3, "{} vs {bs}", q.price);
}

#[test]
fn pricers_report_domain_errors() {
    let mg = MGParams::new(0.0, 0.0, 0.3, 0.5, 0.0, -3.0);
    let err = price_alpha1(&market(), &mg, &grid(), &MCSpec::new(10, 0), VariantMode::Exact).unwrap_err();
    assert!(matches!(err, Error::Domain { field: "alpha", .. }));
    let err = price_mean_path(&market(), &mg, &QuadSpec::default(), SigmaStarReading::Variance).unwrap_err();
    assert_eq!(err.field(), Some("alpha"));
    let err = price_alpha1(&market(), &MGParams { alpha: 1.0, ..mg }, &grid(), &MCSpec::new(0, 0), VariantMode::Exact).unwrap_err();
    assert_eq!(err.field(), Some("n_paths"));
}
