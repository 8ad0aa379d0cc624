use rsrforge::bench::lookup;
use rsrforge::discovery::{infer, property_from_text, InferConfig, Status};
use rsrforge::verification::{classify, VerifyConfig};

fn identities(name: &str, cfg: InferConfig) -> Vec<String> {
    let entry = lookup(name).unwrap();
    let out = infer(&entry.oracle(), &cfg).unwrap();
    out.properties.iter().map(|p| format!("{} = 0", p.identity)).collect()
}

#[test]
fn inverse_is_multiplicative() {
    let found = identities("inverse", InferConfig { max_degree: 2, ..Default::default() });
    assert!(found.iter().any(|s| s == "f(r)*f(x) - f(r*x) = 0"), "{found:?}");
}

#[test]
fn same_seed_same_output() {
    let cfg = InferConfig { max_degree: 2, seed: 11, ..Default::default() };
    assert_eq!(identities("squared", cfg.clone()), identities("squared", cfg));
}

#[test]
fn classify_separates_true_and_false() {
    let entry = lookup("exp").unwrap();
    let oracle = entry.oracle();
    let cfg = VerifyConfig::default();
    let good = property_from_text(0, "f(x + r) - f(x)*f(r) = 0").unwrap();
    let bad = property_from_text(1, "f(x + r) - f(x) - f(r) = 0").unwrap();
    let (g, _) = classify(&good, &oracle, Some(&entry.closed_form), &cfg, 0);
    let (b, _) = classify(&bad, &oracle, Some(&entry.closed_form), &cfg, 0);
    assert_eq!(g.status, Status::VerifiedSymbolic);
    assert_eq!(b.status, Status::Unverified);
}

#[test]
fn numeric_channel_without_closed_form() {
    let entry = lookup("cos").unwrap();
    let good = property_from_text(0, "f(x + r) + f(x - r) - 2*f(x)*f(r) = 0").unwrap();
    let (g, outcomes) = classify(&good, &entry.oracle(), None, &VerifyConfig::default(), 3);
    assert_eq!(g.status, Status::VerifiedNumeric);
    assert!(outcomes.iter().all(|o| o.passed()));
}
