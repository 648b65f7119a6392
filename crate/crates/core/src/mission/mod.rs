//! Clearance of proposed paths, explanation over mission settings, setting
//! optimization and rejection curves.

mod report;

use std::collections::HashMap;
use std::sync::Mutex;

use crate::cola::Constitution;
use crate::error::{Error, Result};
use crate::inference::{probability, Grounder, MissionSetting, Query, DEFAULT_BIT_LIMIT};
use crate::par;
use crate::starmap::StarMap;

pub use report::{explanation_csv, explanation_text, rejection_csv};

/// Default ceiling on the number of settings [`explain`] enumerates.
pub const DEFAULT_SETTING_LIMIT: usize = 64;

/// Outcome of checking one path against a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceReport {
    pub score: f64,
    pub threshold: f64,
    pub granted: bool,
    pub probabilities: Vec<f64>,
}

/// Mean satisfaction probability over `path`; granted when strictly above
/// `threshold`.
pub fn clearance(
    path: &[[f64; 3]],
    prob_at: impl Fn([f64; 3]) -> Result<f64> + Sync + Send,
    threshold: f64,
) -> Result<ClearanceReport> {
    if path.is_empty() {
        return Err(Error::input("cannot clear an empty path"));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::input(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let probabilities = par::try_map_indexed(path.len(), |i| {
        prob_at(path[i]).map_err(|e| Error::Waypoint {
            index: i,
            source: Box::new(e),
        })
    })?;
    let score = probabilities.iter().sum::<f64>() / probabilities.len() as f64;
    Ok(ClearanceReport {
        score,
        threshold,
        granted: score > threshold,
        probabilities,
    })
}

/// Point probabilities of a constitution's logic field objectives, memoized
/// per (setting, point).
pub struct ProbabilityOracle<'a> {
    c: &'a Constitution,
    sm: &'a StarMap,
    query: Query,
    bits: f64,
    memo: Mutex<HashMap<(MissionSetting, [u64; 3]), f64>>,
}

impl<'a> ProbabilityOracle<'a> {
    /// Oracle for the conjunction of all logic field objectives.
    pub fn new(c: &'a Constitution, sm: &'a StarMap) -> Self {
        Self::with_query(c, sm, Query::AllLogicObjectives)
    }

    pub fn with_query(c: &'a Constitution, sm: &'a StarMap, query: Query) -> Self {
        ProbabilityOracle {
            c,
            sm,
            query,
            bits: DEFAULT_BIT_LIMIT,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_bit_limit(mut self, bits: f64) -> Self {
        self.bits = bits;
        self
    }

    pub fn constitution(&self) -> &Constitution {
        self.c
    }

    /// Per-waypoint probabilities of `path` under `setting`.
    pub fn along(&self, path: &[[f64; 3]], setting: &MissionSetting) -> Result<Vec<f64>> {
        let grounder = Grounder::new(self.c, setting, &self.query)?;
        par::try_map_indexed(path.len(), |i| {
            let p = path[i];
            let key = (setting.clone(), p.map(f64::to_bits));
            if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
                return Ok(*v);
            }
            let v = grounder
                .ground(self.sm, p)
                .and_then(|gp| probability(&gp, self.bits))
                .map_err(|e| Error::Waypoint {
                    index: i,
                    source: Box::new(e),
                })?;
            self.memo.lock().expect("memo lock").insert(key, v);
            Ok(v)
        })
    }

    /// Clearance of `path` under `setting`.
    pub fn clearance(
        &self,
        path: &[[f64; 3]],
        setting: &MissionSetting,
        threshold: f64,
    ) -> Result<ClearanceReport> {
        if path.is_empty() {
            return Err(Error::input("cannot clear an empty path"));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::input(format!(
                "threshold {threshold} outside [0, 1]"
            )));
        }
        let probabilities = self.along(path, setting)?;
        let score = probabilities.iter().sum::<f64>() / probabilities.len() as f64;
        Ok(ClearanceReport {
            score,
            threshold,
            granted: score > threshold,
            probabilities,
        })
    }

    /// Mean probability of `path` under `setting`.
    pub fn score(&self, path: &[[f64; 3]], setting: &MissionSetting) -> Result<f64> {
        if path.is_empty() {
            return Err(Error::input("cannot clear an empty path"));
        }
        let probs = self.along(path, setting)?;
        Ok(probs.iter().sum::<f64>() / probs.len() as f64)
    }
}

/// Clearance scores over every mission setting plus per-group impact.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationReport {
    /// Settings with their scores, best first (enumeration order on ties).
    pub scores: Vec<(MissionSetting, f64)>,
    /// Per parameter group: its options and the largest score change caused
    /// by switching only that group's option.
    pub impacts: Vec<GroupImpact>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupImpact {
    pub options: Vec<String>,
    pub impact: f64,
}

/// Scores `path` under every setting of the constitution's parameter groups.
pub fn explain(
    oracle: &ProbabilityOracle<'_>,
    path: &[[f64; 3]],
    limit: usize,
) -> Result<ExplanationReport> {
    explain_within(oracle, path, None, limit)
}

fn allowed_settings(
    c: &Constitution,
    allowed: Option<&[Vec<String>]>,
) -> Result<Vec<MissionSetting>> {
    let all = MissionSetting::enumerate(c);
    let Some(allowed) = allowed else {
        return Ok(all);
    };
    if allowed.len() != c.parameter_groups.len() {
        return Err(Error::input(format!(
            "restriction lists {} groups, constitution has {}",
            allowed.len(),
            c.parameter_groups.len()
        )));
    }
    for (g, opts) in c.parameter_groups.iter().zip(allowed) {
        if opts.is_empty() {
            return Err(Error::input(format!(
                "no allowed option for group {{{}}}",
                g.options.join(", ")
            )));
        }
        if let Some(o) = opts.iter().find(|o| !g.options.contains(o)) {
            return Err(Error::input(format!(
                "`{o}` is not an option of group {{{}}}",
                g.options.join(", ")
            )));
        }
    }
    Ok(all
        .into_iter()
        .filter(|s| s.choices().iter().zip(allowed).all(|(c, a)| a.contains(c)))
        .collect())
}

fn explain_within(
    oracle: &ProbabilityOracle<'_>,
    path: &[[f64; 3]],
    allowed: Option<&[Vec<String>]>,
    limit: usize,
) -> Result<ExplanationReport> {
    let c = oracle.constitution();
    let total = MissionSetting::count(c);
    let settings = allowed_settings(c, allowed)?;
    if settings.len() > limit {
        return Err(Error::Resource(format!(
            "{} mission settings exceed the explanation limit of {limit} (full space {total})",
            settings.len()
        )));
    }
    let raw = par::try_map_indexed(settings.len(), |i| oracle.score(path, &settings[i]))?;
    let impacts = c
        .parameter_groups
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let mut impact: f64 = 0.0;
            for (i, a) in settings.iter().enumerate() {
                for (j, b) in settings.iter().enumerate().skip(i + 1) {
                    let differs_only_here = a
                        .choices()
                        .iter()
                        .zip(b.choices())
                        .enumerate()
                        .all(|(k, (x, y))| (k == g) != (x == y));
                    if differs_only_here {
                        impact = impact.max((raw[i] - raw[j]).abs());
                    }
                }
            }
            GroupImpact {
                options: group.options.clone(),
                impact,
            }
        })
        .collect();
    let mut scores: Vec<(MissionSetting, f64)> = settings.into_iter().zip(raw).collect();
    // stable sort keeps enumeration order among equal scores
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ExplanationReport { scores, impacts })
}

/// The setting maximizing the clearance score of `path`, optionally within
/// `allowed` options per group. Ties go to the earliest setting in
/// declaration order.
pub fn optimize_setting(
    oracle: &ProbabilityOracle<'_>,
    path: &[[f64; 3]],
    allowed: Option<&[Vec<String>]>,
    limit: usize,
) -> Result<(MissionSetting, f64)> {
    let report = explain_within(oracle, path, allowed, limit)?;
    report
        .scores
        .into_iter()
        .next()
        .ok_or_else(|| Error::input("no mission setting to choose from"))
}

/// Rejection rate of a set of clearance scores at sampled thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionCurve {
    pub thresholds: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Samples `r(t)`, the fraction of scores below `t`, at `samples` uniform
/// thresholds over `[0, 1]` and integrates it with the trapezoid rule.
pub fn rejection_area(scores: &[f64], samples: usize) -> Result<(RejectionCurve, f64)> {
    if scores.is_empty() {
        return Err(Error::input("no clearance scores"));
    }
    if samples < 2 {
        return Err(Error::input("need at least 2 threshold samples"));
    }
    let n = scores.len() as f64;
    let thresholds: Vec<f64> = (0..samples)
        .map(|i| i as f64 / (samples - 1) as f64)
        .collect();
    let rates: Vec<f64> = thresholds
        .iter()
        .map(|&t| scores.iter().filter(|&&c| c < t).count() as f64 / n)
        .collect();
    let h = 1.0 / (samples - 1) as f64;
    let area = rates.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
    Ok((RejectionCurve { thresholds, rates }, area))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cola::{bundled, parse};
    use crate::inference::fixtures::constant_map;

    fn path() -> Vec<[f64; 3]> {
        (0..10)
            .map(|i| [10.0 + 15.0 * i as f64, 50.0, 20.0 * i as f64])
            .collect()
    }

    fn urban_map() -> StarMap {
        let tags = [
            "primary",
            "secondary",
            "building",
            "stadium",
            "government",
            "embassy",
        ];
        let dist: Vec<(&str, f64, f64)> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, 30.0 + 50.0 * i as f64, 30.0))
            .collect();
        constant_map(&[("park", 0.3)], &dist)
    }

    #[test]
    fn clearance_examples() {
        let p = [[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let probs = [1.0, 0.8, 0.6];
        let r = clearance(&p, |q| Ok(probs[q[0] as usize]), 0.75).unwrap();
        assert!((r.score - 0.8).abs() < 1e-12);
        assert!(r.granted);
        assert!(clearance(&p, |_| Ok(1.0), 0.999).unwrap().granted);
        let zero = clearance(&p, |_| Ok(0.0), 0.0).unwrap();
        assert_eq!(zero.score, 0.0);
        assert!(!zero.granted);
        assert!(!clearance(&p, |_| Ok(0.5), 0.5).unwrap().granted);
        assert!(clearance(&[], |_| Ok(1.0), 0.5).is_err());
    }

    #[test]
    fn clearance_is_permutation_invariant() {
        let c = parse(bundled::URBAN).unwrap();
        let sm = urban_map();
        let oracle = ProbabilityOracle::new(&c, &sm);
        let s = MissionSetting::first(&c);
        let p = path();
        let mut q = p.clone();
        q.reverse();
        let a = oracle.clearance(&p, &s, 0.5).unwrap().score;
        let b = oracle.clearance(&q, &s, 0.5).unwrap().score;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn explain_example_has_four_settings() {
        let c = parse(bundled::EXAMPLE).unwrap();
        let sm = constant_map(&[], &[("pilot", 80.0, 20.0)]);
        let oracle = ProbabilityOracle::new(&c, &sm);
        let r = explain(&oracle, &path()[..3], DEFAULT_SETTING_LIMIT).unwrap();
        assert_eq!(r.scores.len(), 4);
        assert!(r.scores.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(r.impacts.len(), 2);
        assert!(explain(&oracle, &path(), 3).is_err());
    }

    #[test]
    fn unused_group_has_zero_impact() {
        let c =
            parse("parameter {a, b}.\nparameter {x, y}.\nfield objective o if a or over(park).")
                .unwrap();
        let sm = constant_map(&[("park", 0.4)], &[]);
        let oracle = ProbabilityOracle::new(&c, &sm);
        let r = explain(&oracle, &path()[..2], DEFAULT_SETTING_LIMIT).unwrap();
        assert!((r.impacts[0].impact - 0.6).abs() < 1e-12);
        assert_eq!(r.impacts[1].impact, 0.0);
        // ties keep enumeration order, so option `a` with `x` comes first
        assert_eq!(r.scores[0].0.choices(), ["a", "x"]);
    }

    #[test]
    fn no_parameters_single_score() {
        let c = parse("field objective o if over(park).").unwrap();
        let sm = constant_map(&[("park", 0.4)], &[]);
        let oracle = ProbabilityOracle::new(&c, &sm);
        let r = explain(&oracle, &path()[..2], DEFAULT_SETTING_LIMIT).unwrap();
        assert_eq!(r.scores.len(), 1);
        assert!(r.impacts.is_empty());
    }

    #[test]
    fn optimize_prefers_expanded_license() {
        let c = parse(bundled::URBAN).unwrap();
        let sm = urban_map();
        let oracle = ProbabilityOracle::new(&c, &sm);
        let p = path();
        let (best, score) = optimize_setting(&oracle, &p, None, DEFAULT_SETTING_LIMIT).unwrap();
        assert_eq!(best.choices()[0], "expanded_license");
        let all = explain(&oracle, &p, DEFAULT_SETTING_LIMIT).unwrap();
        assert!(all.scores.iter().all(|(_, s)| *s <= score));

        let only_std = vec![
            vec!["standard_license".to_owned()],
            vec!["daytime".to_owned(), "nighttime".to_owned()],
        ];
        let (best, s2) =
            optimize_setting(&oracle, &p, Some(&only_std), DEFAULT_SETTING_LIMIT).unwrap();
        assert_eq!(best.choices()[0], "standard_license");
        let std_best = all
            .scores
            .iter()
            .filter(|(s, _)| s.choices()[0] == "standard_license")
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        assert_eq!(s2, std_best);
        let empty = vec![vec![], vec!["daytime".to_owned()]];
        assert!(optimize_setting(&oracle, &p, Some(&empty), DEFAULT_SETTING_LIMIT).is_err());
    }

    #[test]
    fn rejection_examples() {
        let (_, a) = rejection_area(&[1.0, 1.0], 101).unwrap();
        assert_eq!(a, 0.0);
        let (curve, a) = rejection_area(&[0.0, 0.0], 101).unwrap();
        assert!((a - 0.995).abs() < 1e-12, "{a}");
        assert_eq!(curve.rates[0], 0.0);
        let scores = [0.13, 0.5, 0.77, 0.91, 0.02];
        let (curve, a) = rejection_area(&scores, 1001).unwrap();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        assert!((a - (1.0 - mean)).abs() < 1e-3);
        assert!(curve.rates.windows(2).all(|w| w[0] <= w[1]));
        assert!(rejection_area(&[], 10).is_err());
        assert!(rejection_area(&[0.5], 1).is_err());
    }

    #[test]
    fn reports_render() {
        let c = parse(bundled::URBAN).unwrap();
        let sm = urban_map();
        let oracle = ProbabilityOracle::new(&c, &sm);
        let r = explain(&oracle, &path(), DEFAULT_SETTING_LIMIT).unwrap();
        let csv = explanation_csv(&c, &r, 0.5);
        assert!(csv.starts_with("group1,group2,score,granted\n"));
        assert_eq!(csv.lines().count(), 5);
        let text = explanation_text(&c, &r, 0.5);
        assert!(text.contains("impact per parameter group"));
        let (curve, _) = rejection_area(&[0.5], 3).unwrap();
        assert_eq!(
            rejection_csv(&curve),
            "threshold,rejection_rate\n0,0\n0.5,0\n1,1\n"
        );
    }
}
