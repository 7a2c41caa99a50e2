//! Label-noise planning and injection under NCAR and NAR.
//!
//! A noise level `p` and class ratio `M = n1 / n2` resolve to integer flip
//! counts for the minority (`n1`) and majority (`n2`) classes:
//!
//! ```text
//! n_total = round(p * d_n)
//! n1      = round(M * n_total / (M + 1))
//! n2      = n_total - n1
//! ```
//!
//! Rounding is half-up, and `n2` is obtained by subtraction so that
//! `n1 + n2 == n_total` always holds. NCAR is NAR with `M = 1`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{Class, Dataset, Schema, COUNT_EPS};
use crate::error::{Error, Result};
use crate::seed;

/// Ratio `M` of minority flips to majority flips, as `minority:majority`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseRatio {
    minority: u32,
    majority: u32,
}

impl NoiseRatio {
    pub const EVEN: NoiseRatio = NoiseRatio {
        minority: 1,
        majority: 1,
    };

    pub fn new(minority: u32, majority: u32) -> Result<Self> {
        if minority == 0 || majority == 0 {
            return Err(Error::InvalidParameter(format!(
                "noise ratio {minority}:{majority} must be positive"
            )));
        }
        Ok(NoiseRatio { minority, majority })
    }

    pub fn minority(&self) -> u32 {
        self.minority
    }

    pub fn majority(&self) -> u32 {
        self.majority
    }

    pub fn value(&self) -> f64 {
        f64::from(self.minority) / f64::from(self.majority)
    }
}

impl fmt::Display for NoiseRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.minority, self.majority)
    }
}

impl FromStr for NoiseRatio {
    type Err = Error;

    /// Accepts `9:1`, `1/9` or a bare integer `9`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse noise ratio `{s}`"));
        let s = s.trim();
        let (a, b) = match s.split_once([':', '/']) {
            Some((a, b)) => (a, b),
            None => (s, "1"),
        };
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        NoiseRatio::new(a, b)
    }
}

/// Label-noise model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseModel {
    /// Noisy completely at random: flips spread evenly over both classes.
    Ncar,
    /// Noisy at random: flip counts depend on the true class through `M`.
    Nar(NoiseRatio),
}

impl NoiseModel {
    pub fn ratio(&self) -> NoiseRatio {
        match self {
            NoiseModel::Ncar => NoiseRatio::EVEN,
            NoiseModel::Nar(r) => *r,
        }
    }

    /// `"NCAR"` or `"NAR"`.
    pub fn family(&self) -> &'static str {
        match self {
            NoiseModel::Ncar => "NCAR",
            NoiseModel::Nar(_) => "NAR",
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Ncar => f.write_str("NCAR"),
            NoiseModel::Nar(r) => write!(f, "NAR({r})"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// Accepts `NCAR`, `NAR(9:1)`, `NAR 9:1`, `NAR:1/9` or a bare ratio.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("ncar") {
            return Ok(NoiseModel::Ncar);
        }
        let body = if t.len() >= 3 && t[..3].eq_ignore_ascii_case("nar") {
            t[3..].trim_start_matches([' ', ':', '(']).trim_end_matches(')')
        } else {
            t
        };
        Ok(NoiseModel::Nar(body.parse()?))
    }
}

impl Serialize for NoiseModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NoiseModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Resolved per-class flip counts for one test set.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePlan {
    pub p: f64,
    pub model: NoiseModel,
    pub minority: Class,
    pub n_minority: usize,
    pub n_majority: usize,
    pub test_size: usize,
}

impl NoisePlan {
    pub fn total(&self) -> usize {
        self.n_minority + self.n_majority
    }
}

/// Half-up rounding of `p * d` with a small slack for binary fractions.
fn round_total(p: f64, d: usize) -> usize {
    (p * d as f64 + 0.5 + COUNT_EPS).floor() as usize
}

/// Splits `total` flips by ratio `r`, rounding the minority share half-up.
pub fn split_counts(total: usize, r: NoiseRatio) -> (usize, usize) {
    let (a, b) = (r.minority as usize, r.majority as usize);
    let n1 = (2 * a * total + a + b) / (2 * (a + b));
    (n1, total - n1)
}

pub fn plan_noise(test: &Dataset, p: f64, model: NoiseModel) -> Result<NoisePlan> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("noise level {p} outside [0, 1]")));
    }
    let counts = test.class_counts();
    let minority = counts.minority();
    let (min_avail, maj_avail) = (counts.get(minority), counts.get(minority.flipped()));
    let d = test.len();
    let total = round_total(p, d);
    let (n1, n2) = split_counts(total, model.ratio());
    if n1 > min_avail || n2 > maj_avail {
        let fits = |t: usize| {
            let (a, b) = split_counts(t, model.ratio());
            a <= min_avail && b <= maj_avail
        };
        let max_total = (0..total).rev().find(|&t| fits(t)).unwrap_or(0);
        return Err(Error::InfeasiblePlan {
            n_minority: n1,
            n_majority: n2,
            minority_available: min_avail,
            majority_available: maj_avail,
            max_feasible_p: if d == 0 { 0.0 } else { max_total as f64 / d as f64 },
        });
    }
    Ok(NoisePlan {
        p,
        model,
        minority,
        n_minority: n1,
        n_majority: n2,
        test_size: d,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    pub id: u64,
    pub original: Class,
    pub observed: Class,
}

impl LedgerEntry {
    pub fn flipped(&self) -> bool {
        self.original != self.observed
    }
}

/// Ground truth of an injection: one entry per test instance, id order.
#[derive(Clone, Debug, PartialEq)]
pub struct InjectionLedger {
    entries: Vec<LedgerEntry>,
    minority: Class,
    minority_flips: usize,
    majority_flips: usize,
    seed: u64,
}

impl InjectionLedger {
    /// Ledger describing the label differences between two copies of the
    /// same instances. The minority class is taken from `original`.
    pub fn between(original: &Dataset, observed: &Dataset) -> Result<Self> {
        if !original.ids().eq(observed.ids()) {
            return Err(Error::IdMismatch(
                "original and observed datasets hold different ids".into(),
            ));
        }
        let minority = original.class_counts().minority();
        let entries: Vec<LedgerEntry> = original
            .instances()
            .iter()
            .zip(observed.instances())
            .map(|(o, n)| LedgerEntry {
                id: o.id,
                original: o.label,
                observed: n.label,
            })
            .collect();
        let flips = |c: Class| entries.iter().filter(|e| e.flipped() && e.original == c).count();
        Ok(InjectionLedger {
            minority_flips: flips(minority),
            majority_flips: flips(minority.flipped()),
            entries,
            minority,
            seed: 0,
        })
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn minority(&self) -> Class {
        self.minority
    }

    pub fn minority_flips(&self) -> usize {
        self.minority_flips
    }

    pub fn majority_flips(&self) -> usize {
        self.majority_flips
    }

    pub fn flipped_ids(&self) -> BTreeSet<u64> {
        self.entries.iter().filter(|e| e.flipped()).map(|e| e.id).collect()
    }

    pub fn id_set(&self) -> BTreeSet<u64> {
        self.entries.iter().map(|e| e.id).collect()
    }

    /// Undoes the recorded flips on `noisy`.
    pub fn restore(&self, noisy: &Dataset) -> Dataset {
        let flipped = self.flipped_ids();
        noisy.map_labels(|i| {
            if flipped.contains(&i.id) {
                i.label.flipped()
            } else {
                i.label
            }
        })
    }

    /// Columns: `id, original_label, observed_label, flipped`.
    pub fn write_csv_to<W: Write>(&self, schema: &Schema, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "original_label", "observed_label", "flipped"])?;
        for e in &self.entries {
            w.write_record([
                e.id.to_string().as_str(),
                schema.label_value(e.original),
                schema.label_value(e.observed),
                if e.flipped() { "1" } else { "0" },
            ])?;
        }
        w.flush().map_err(|e| Error::io("<ledger writer>", e))?;
        Ok(())
    }
}

/// Flips exactly `n_minority` minority and `n_majority` majority labels,
/// each set drawn uniformly without replacement. Features are untouched.
pub fn inject(test: &Dataset, plan: &NoisePlan, seed: u64) -> Result<(Dataset, InjectionLedger)> {
    if plan.test_size != test.len() {
        return Err(Error::PlanMismatch {
            planned: plan.test_size,
            actual: test.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let mut flipped = BTreeSet::new();
    for (class, n) in [(plan.minority, plan.n_minority), (plan.minority.flipped(), plan.n_majority)] {
        let ids: Vec<u64> = test
            .instances()
            .iter()
            .filter(|i| i.label == class)
            .map(|i| i.id)
            .collect();
        if n > ids.len() {
            let counts = test.class_counts();
            return Err(Error::InfeasiblePlan {
                n_minority: plan.n_minority,
                n_majority: plan.n_majority,
                minority_available: counts.get(plan.minority),
                majority_available: counts.get(plan.minority.flipped()),
                max_feasible_p: 0.0,
            });
        }
        flipped.extend(index::sample(&mut rng, ids.len(), n).into_iter().map(|i| ids[i]));
    }
    let noisy = test.map_labels(|i| {
        if flipped.contains(&i.id) {
            i.label.flipped()
        } else {
            i.label
        }
    });
    let ledger = InjectionLedger {
        minority: plan.minority,
        seed,
        ..InjectionLedger::between(test, &noisy)?
    };
    Ok((noisy, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticParams};

    fn dataset(pos: usize, neg: usize) -> Dataset {
        generate_synthetic(
            &SyntheticParams {
                positives: pos,
                negatives: neg,
                dims: 1,
                separation: 2.0,
            },
            1,
        )
        .unwrap()
    }

    fn nar(a: u32, b: u32) -> NoiseModel {
        NoiseModel::Nar(NoiseRatio::new(a, b).unwrap())
    }

    #[test]
    fn worked_examples_for_a_thousand_instances() {
        let d = dataset(500, 500);
        let counts = |m| {
            let plan = plan_noise(&d, 0.10, m).unwrap();
            (plan.n_minority, plan.n_majority)
        };
        assert_eq!(counts(NoiseModel::Ncar), (50, 50));
        assert_eq!(counts(nar(9, 1)), (90, 10));
        assert_eq!(counts(nar(1, 9)), (10, 90));
        assert_eq!(counts(nar(1, 1)), (50, 50));
    }

    #[test]
    fn zero_noise_is_empty_plan_and_identity() {
        let d = dataset(30, 70);
        let plan = plan_noise(&d, 0.0, nar(9, 1)).unwrap();
        assert_eq!((plan.n_minority, plan.n_majority), (0, 0));
        let (noisy, ledger) = inject(&d, &plan, 5).unwrap();
        assert_eq!(noisy, d);
        assert!(ledger.flipped_ids().is_empty());
    }

    #[test]
    fn symmetric_flips_keep_class_counts() {
        let d = dataset(500, 500);
        let plan = plan_noise(&d, 0.10, NoiseModel::Ncar).unwrap();
        let (noisy, ledger) = inject(&d, &plan, 3).unwrap();
        assert_eq!(noisy.class_counts(), d.class_counts());
        assert_eq!(ledger.flipped_ids().len(), 100);
    }

    #[test]
    fn nar_flips_shift_the_observed_minority_count() {
        let d = dataset(200, 800);
        let plan = NoisePlan {
            p: 0.1,
            model: nar(9, 1),
            minority: Class::Positive,
            n_minority: 90,
            n_majority: 10,
            test_size: 1000,
        };
        let (noisy, ledger) = inject(&d, &plan, 8).unwrap();
        // Recount from the ledger: 200 originally positive, 90 of them now
        // negative, 10 negatives now positive.
        let recount = ledger
            .entries()
            .iter()
            .filter(|e| e.observed == Class::Positive)
            .count();
        assert_eq!(recount, 200 - 90 + 10);
        assert_eq!(noisy.class_counts().positive, 120);
        assert_eq!(ledger.minority_flips(), 90);
        assert_eq!(ledger.restore(&noisy), d);
    }

    #[test]
    fn infeasible_plan_reports_max_feasible_p() {
        let d = dataset(20, 180);
        match plan_noise(&d, 0.20, nar(9, 1)) {
            Err(Error::InfeasiblePlan { max_feasible_p, n_minority, .. }) => {
                assert_eq!(n_minority, 36);
                // 22 flips -> (20, 2) is the largest total that still fits.
                assert_eq!(max_feasible_p, 22.0 / 200.0);
            }
            other => panic!("expected infeasible plan, got {other:?}"),
        }
    }

    #[test]
    fn plan_mismatch_is_rejected() {
        let d = dataset(50, 50);
        let plan = plan_noise(&dataset(60, 60), 0.1, NoiseModel::Ncar).unwrap();
        assert!(matches!(inject(&d, &plan, 0), Err(Error::PlanMismatch { .. })));
        assert!(plan_noise(&d, 1.5, NoiseModel::Ncar).is_err());
    }

    #[test]
    fn parsing_and_display() {
        assert_eq!("NCAR".parse::<NoiseModel>().unwrap(), NoiseModel::Ncar);
        assert_eq!("NAR(9:1)".parse::<NoiseModel>().unwrap(), nar(9, 1));
        assert_eq!("nar 1/9".parse::<NoiseModel>().unwrap(), nar(1, 9));
        assert_eq!("9".parse::<NoiseModel>().unwrap(), nar(9, 1));
        assert!("NAR(0:1)".parse::<NoiseModel>().is_err());
        assert_eq!(nar(1, 9).to_string(), "NAR(1:9)");
        assert_eq!(NoiseModel::Ncar.ratio(), NoiseRatio::EVEN);
    }

    #[test]
    fn exhaustive_plan_grid() {
        let models = [nar(1, 9), NoiseModel::Ncar, nar(9, 1)];
        for d in (100..=1000).step_by(50) {
            for minority in [d / 10, d / 5, d / 2] {
                let data = dataset(minority, d - minority);
                for p in [0.05, 0.1, 0.15, 0.2] {
                    let total = (p * d as f64).round() as usize;
                    for m in models {
                        let r = m.ratio();
                        // Independent half-up rounding of M * total / (M + 1),
                        // written as a * total / (a + b) so halves are exact.
                        let mval = r.value();
                        let (a, b) = (r.minority() as f64, r.majority() as f64);
                        let n1 = (a * total as f64 / (a + b) + 0.5).floor() as usize;
                        let n2 = total - n1;
                        assert!((n1 as f64 - mval * n2 as f64).abs() <= (mval + 1.0) / 2.0 + 1e-9);
                        let feasible = n1 <= minority && n2 <= d - minority;
                        match plan_noise(&data, p, m) {
                            Ok(plan) => {
                                assert!(feasible);
                                assert_eq!((plan.n_minority, plan.n_majority), (n1, n2), "d={d} p={p} {m}");
                            }
                            Err(Error::InfeasiblePlan { max_feasible_p, .. }) => {
                                assert!(!feasible, "d={d} p={p} {m}");
                                assert!(plan_noise(&data, max_feasible_p, m).is_ok());
                            }
                            Err(e) => panic!("{e}"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn flips_are_uniform_within_each_class() {
        let d = dataset(20, 80);
        let plan = plan_noise(&d, 0.2, nar(1, 1)).unwrap();
        let trials = 4000;
        let mut hits = std::collections::HashMap::<u64, usize>::new();
        for s in 0..trials {
            let (_, ledger) = inject(&d, &plan, s).unwrap();
            for id in ledger.flipped_ids() {
                *hits.entry(id).or_default() += 1;
            }
        }
        for inst in d.instances() {
            let n_class = if inst.label == plan.minority { 20.0 } else { 80.0 };
            let k = if inst.label == plan.minority { plan.n_minority } else { plan.n_majority };
            let q = k as f64 / n_class;
            let expected = q * trials as f64;
            let sd = (trials as f64 * q * (1.0 - q)).sqrt();
            let got = *hits.get(&inst.id).unwrap_or(&0) as f64;
            assert!((got - expected).abs() < 5.0 * sd, "id {} flipped {got} times, expected {expected}", inst.id);
        }
    }

    #[test]
    fn ledger_csv_layout() {
        let d = dataset(2, 2);
        let plan = plan_noise(&d, 0.5, NoiseModel::Ncar).unwrap();
        let (_, ledger) = inject(&d, &plan, 0).unwrap();
        let mut buf = Vec::new();
        ledger.write_csv_to(d.schema(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("id,original_label,observed_label,flipped"));
        assert_eq!(text.matches(",1\n").count(), 2);
    }
}
