//! Verification and identification metrics, test-set sizing and the analytic
//! cost model comparing DTW with codebook matching.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusionSpec;
use crate::signal::{FeatureMatrix, UserId};
use crate::vq::{model_score, SectionedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForgeryKind {
    Random,
    Skilled,
}

impl ForgeryKind {
    pub fn name(self) -> &'static str {
        match self {
            ForgeryKind::Random => "random",
            ForgeryKind::Skilled => "skilled",
        }
    }
}

/// Which impostor trials to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForgeryFilter {
    Only(ForgeryKind),
    All,
}

impl ForgeryFilter {
    fn admits(self, kind: ForgeryKind) -> bool {
        match self {
            ForgeryFilter::Only(k) => k == kind,
            ForgeryFilter::All => true,
        }
    }
}

impl From<ForgeryKind> for ForgeryFilter {
    fn from(k: ForgeryKind) -> Self {
        ForgeryFilter::Only(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenuineScore {
    pub user: UserId,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpostorScore {
    pub user: UserId,
    pub score: f64,
    pub kind: ForgeryKind,
}

/// Labeled match scores. Lower scores are more likely genuine.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    pub genuine: Vec<GenuineScore>,
    pub impostor: Vec<ImpostorScore>,
}

impl ScoreSet {
    pub fn push_genuine(&mut self, user: UserId, score: f64) {
        self.genuine.push(GenuineScore { user, score });
    }

    pub fn push_impostor(&mut self, user: UserId, score: f64, kind: ForgeryKind) {
        self.impostor.push(ImpostorScore { user, score, kind });
    }

    fn split(&self, filter: ForgeryFilter) -> (Vec<f64>, Vec<f64>) {
        let g = self.genuine.iter().map(|s| s.score).collect();
        let i = self
            .impostor
            .iter()
            .filter(|s| filter.admits(s.kind))
            .map(|s| s.score)
            .collect();
        (g, i)
    }

    /// Restriction to one claimed user.
    pub fn for_user(&self, user: UserId) -> ScoreSet {
        ScoreSet {
            genuine: self
                .genuine
                .iter()
                .filter(|s| s.user == user)
                .copied()
                .collect(),
            impostor: self
                .impostor
                .iter()
                .filter(|s| s.user == user)
                .copied()
                .collect(),
        }
    }

    pub fn users(&self) -> Vec<UserId> {
        let mut u: Vec<UserId> = self
            .genuine
            .iter()
            .map(|s| s.user)
            .chain(self.impostor.iter().map(|s| s.user))
            .collect();
        u.sort();
        u.dedup();
        u
    }

    /// FAR and FRR of the decision rule "accept iff score <= threshold".
    pub fn rates_at(&self, threshold: f64, filter: ForgeryFilter) -> Result<(f64, f64)> {
        let (g, i) = self.split(filter);
        if g.is_empty() || i.is_empty() {
            return Err(Error::input(
                "need at least one genuine and one impostor score",
            ));
        }
        let far = i.iter().filter(|s| **s <= threshold).count() as f64 / i.len() as f64;
        let frr = g.iter().filter(|s| **s > threshold).count() as f64 / g.len() as f64;
        Ok((far, frr))
    }

    /// Delimiter-separated dump: `label<TAB>kind<TAB>user<TAB>score`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# label\tkind\tuser\tscore\n");
        for s in &self.genuine {
            let _ = writeln!(out, "genuine\t-\t{}\t{}", s.user, s.score);
        }
        for s in &self.impostor {
            let _ = writeln!(out, "impostor\t{}\t{}\t{}", s.kind.name(), s.user, s.score);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// FAR/FRR trade-off sampled at every distinct score value.
#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

impl DetCurve {
    /// Delimiter-separated dump, one operating point per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# threshold\tfar\tfrr\n");
        for p in &self.points {
            let _ = writeln!(out, "{}\t{}\t{}", p.threshold, p.far, p.frr);
        }
        out
    }
}

/// Sweeps the threshold over all distinct scores.
pub fn far_frr(scores: &ScoreSet, filter: ForgeryFilter) -> Result<DetCurve> {
    let (mut g, mut i) = scores.split(filter);
    if g.is_empty() || i.is_empty() {
        return Err(Error::input(
            "need at least one genuine and one impostor score",
        ));
    }
    if g.iter().chain(&i).any(|s| !s.is_finite()) {
        return Err(Error::input("scores must be finite"));
    }
    g.sort_by(f64::total_cmp);
    i.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = g.iter().chain(&i).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (ng, ni) = (g.len() as f64, i.len() as f64);
    let (mut gi, mut ii) = (0usize, 0usize);
    let points = thresholds
        .into_iter()
        .map(|t| {
            while gi < g.len() && g[gi] <= t {
                gi += 1;
            }
            while ii < i.len() && i[ii] <= t {
                ii += 1;
            }
            DetPoint {
                threshold: t,
                far: ii as f64 / ni,
                frr: (g.len() - gi) as f64 / ng,
            }
        })
        .collect();
    Ok(DetCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    pub eer: f64,
    pub threshold: f64,
}

/// Locates the FAR = FRR crossing.
///
/// Between the two sweep points that bracket the crossing both rates are linearly
/// interpolated. When the rates coincide over a run of points, the midpoint of the
/// threshold interval over which they are equal is reported.
pub fn eer(curve: &DetCurve) -> Result<EerPoint> {
    let pts = &curve.points;
    if pts.is_empty() {
        return Err(Error::input("empty DET curve"));
    }
    let k = pts
        .iter()
        .position(|p| p.far - p.frr >= 0.0)
        .ok_or_else(|| Error::input("DET curve never reaches FAR >= FRR"))?;
    let p = pts[k];
    let diff = p.far - p.frr;
    if diff == 0.0 {
        let mut last = k;
        while last + 1 < pts.len() && pts[last + 1].far == pts[last + 1].frr {
            last += 1;
        }
        // equality holds until the next sweep point changes a rate
        let upper = pts
            .get(last + 1)
            .map_or(pts[last].threshold, |q| q.threshold);
        return Ok(EerPoint {
            eer: p.far,
            threshold: (p.threshold + upper) / 2.0,
        });
    }
    // below the lowest score nothing is accepted: FAR 0, FRR 1
    let q = if k == 0 {
        DetPoint {
            threshold: p.threshold,
            far: 0.0,
            frr: 1.0,
        }
    } else {
        pts[k - 1]
    };
    let qdiff = q.far - q.frr;
    let f = -qdiff / (diff - qdiff);
    Ok(EerPoint {
        eer: q.far + f * (p.far - q.far),
        threshold: q.threshold + f * (p.threshold - q.threshold),
    })
}

/// EER with one threshold shared by all users.
pub fn eer_general(scores: &ScoreSet, filter: ForgeryFilter) -> Result<EerPoint> {
    eer(&far_frr(scores, filter)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualEer {
    /// Unweighted mean of the per-user EERs.
    pub mean: f64,
    pub per_user: Vec<(UserId, EerPoint)>,
    /// Users lacking genuine or impostor scores.
    pub excluded: Vec<UserId>,
}

/// EER with a separate threshold per user, averaged over users.
pub fn eer_individual(scores: &ScoreSet, filter: ForgeryFilter) -> Result<IndividualEer> {
    let mut by_user: BTreeMap<UserId, ScoreSet> = BTreeMap::new();
    for s in &scores.genuine {
        by_user.entry(s.user).or_default().genuine.push(*s);
    }
    for s in scores.impostor.iter().filter(|s| filter.admits(s.kind)) {
        by_user.entry(s.user).or_default().impostor.push(*s);
    }
    let mut per_user = Vec::new();
    let mut excluded = Vec::new();
    for (user, set) in by_user {
        if set.genuine.is_empty() || set.impostor.is_empty() {
            log::warn!(
                "user {user} lacks genuine or impostor scores; excluded from individual EER"
            );
            excluded.push(user);
            continue;
        }
        per_user.push((user, eer_general(&set, ForgeryFilter::All)?));
    }
    if per_user.is_empty() {
        return Err(Error::input("no user has both genuine and impostor scores"));
    }
    let mean = per_user.iter().map(|(_, e)| e.eer).sum::<f64>() / per_user.len() as f64;
    Ok(IndividualEer {
        mean,
        per_user,
        excluded,
    })
}

/// Returns the enrolled user whose model gives the lowest score, ties to the lowest id.
pub fn identify(
    test: &FeatureMatrix,
    models: &[SectionedModel],
    fusion: &FusionSpec,
) -> Result<UserId> {
    let mut best: Option<(f64, UserId)> = None;
    for m in models {
        let (score, _) = model_score(test, m, fusion)?;
        let better = match best {
            None => true,
            Some((s, u)) => score < s || (score == s && m.user_id < u),
        };
        if better {
            best = Some((score, m.user_id));
        }
    }
    best.map(|(_, u)| u)
        .ok_or_else(|| Error::input("identification needs at least one enrolled model"))
}

/// Risk `alpha`, relative error `beta` and the error-rate estimate `p_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceQuery {
    pub alpha: f64,
    pub beta: f64,
    pub p_hat: f64,
}

/// Minimum independent test count `(exact, simplified)` such that the true error
/// rate exceeds the estimate by more than `beta * p_hat` with probability below
/// `alpha`: `-ln(alpha) / (beta^2 p)` and `100 / p`, both rounded up.
pub fn required_test_size(q: SignificanceQuery) -> Result<(u64, u64)> {
    let unit = |v: f64| v > 0.0 && v <= 1.0;
    if !(unit(q.alpha) && q.alpha < 1.0 && unit(q.beta) && unit(q.p_hat)) {
        return Err(Error::input(format!("invalid significance query {q:?}")));
    }
    let exact = -q.alpha.ln() / (q.beta * q.beta * q.p_hat);
    let simplified = 100.0 / q.p_hat;
    Ok((exact.ceil() as u64, simplified.ceil() as u64))
}

/// Analytic cost and storage model of DTW versus (multi-section) VQ matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkCounts {
    pub templates: usize,
    pub test_len: usize,
    pub ref_len: usize,
    pub codebook_size: usize,
    pub sections: usize,
    /// `K * I * J / 3`
    pub dtw_distance_evals: f64,
    /// `I * L`, independent of the section count
    pub vq_distance_evals: f64,
    /// `K * J / (3 L)`
    pub speedup_ratio: f64,
    /// Stored reference vectors per user: `K * J`
    pub storage_dtw: usize,
    /// `L`
    pub storage_vq: usize,
    /// `S * L`
    pub storage_msvq: usize,
    /// `K * J / L`
    pub data_reduction: f64,
}

pub fn benchmark_counts(
    templates: usize,
    test_len: usize,
    ref_len: usize,
    codebook_size: usize,
    sections: usize,
) -> Result<BenchmarkCounts> {
    if [templates, test_len, ref_len, codebook_size, sections].contains(&0) {
        return Err(Error::input("all benchmark dimensions must be positive"));
    }
    let (k, i, j, l) = (
        templates as f64,
        test_len as f64,
        ref_len as f64,
        codebook_size as f64,
    );
    let dtw = k * i * j / 3.0;
    let vq = i * l;
    Ok(BenchmarkCounts {
        templates,
        test_len,
        ref_len,
        codebook_size,
        sections,
        dtw_distance_evals: dtw,
        vq_distance_evals: vq,
        speedup_ratio: dtw / vq,
        storage_dtw: templates * ref_len,
        storage_vq: codebook_size,
        storage_msvq: sections * codebook_size,
        data_reduction: k * j / l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(genuine: &[f64], impostor: &[f64]) -> ScoreSet {
        let mut s = ScoreSet::default();
        for &g in genuine {
            s.push_genuine(UserId(0), g);
        }
        for &i in impostor {
            s.push_impostor(UserId(0), i, ForgeryKind::Random);
        }
        s
    }

    /// Brute-force rates straight from the definition.
    fn sweep(g: &[f64], i: &[f64], t: f64) -> (f64, f64) {
        let far = i.iter().filter(|s| **s <= t).count() as f64 / i.len() as f64;
        let frr = g.iter().filter(|s| **s > t).count() as f64 / g.len() as f64;
        (far, frr)
    }

    #[test]
    fn separable() {
        let s = set(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(s.rates_at(2.5, ForgeryFilter::All).unwrap(), (0.0, 0.0));
        let e = eer_general(&s, ForgeryFilter::All).unwrap();
        assert_eq!(e.eer, 0.0);
        assert_eq!(e.threshold, 2.5);
    }

    #[test]
    fn overlapping_example() {
        let g = [1.0, 2.0, 3.0, 10.0];
        let i = [4.0, 5.0, 6.0, 7.0];
        let s = set(&g, &i);
        for t in [4.0, 4.5, 4.99] {
            assert_eq!(s.rates_at(t, ForgeryFilter::All).unwrap(), (0.25, 0.25));
            assert_eq!(sweep(&g, &i, t), (0.25, 0.25));
        }
        assert_eq!(eer_general(&s, ForgeryFilter::All).unwrap().eer, 0.25);
    }

    #[test]
    fn identical_distributions() {
        let s = set(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert!((eer_general(&s, ForgeryFilter::All).unwrap().eer - 0.5).abs() < 1e-12);
        let s = set(&[1.0], &[1.0]);
        assert!((eer_general(&s, ForgeryFilter::All).unwrap().eer - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_side_is_an_error() {
        let s = set(&[1.0], &[]);
        assert!(far_frr(&s, ForgeryFilter::All).is_err());
        let s = set(&[1.0], &[2.0]);
        assert!(far_frr(&s, ForgeryFilter::Only(ForgeryKind::Skilled)).is_err());
    }

    #[test]
    fn forgery_filter_selects_kind() {
        let mut s = set(&[1.0, 2.0], &[3.0]);
        s.push_impostor(UserId(0), 0.5, ForgeryKind::Skilled);
        assert_eq!(
            eer_general(&s, ForgeryKind::Random.into()).unwrap().eer,
            0.0
        );
        assert!(eer_general(&s, ForgeryKind::Skilled.into()).unwrap().eer > 0.0);
    }

    #[test]
    fn individual_single_user_equals_general() {
        let s = set(&[1.0, 2.0, 3.0, 10.0], &[4.0, 5.0, 6.0, 7.0]);
        let ind = eer_individual(&s, ForgeryFilter::All).unwrap();
        assert_eq!(ind.mean, eer_general(&s, ForgeryFilter::All).unwrap().eer);
    }

    #[test]
    fn individual_beats_general_on_shifted_users() {
        let mut s = ScoreSet::default();
        for (u, offset) in [(UserId(1), 0.0), (UserId(2), 10.0)] {
            for g in [1.0, 2.0] {
                s.push_genuine(u, g + offset);
            }
            for i in [3.0, 4.0] {
                s.push_impostor(u, i + offset, ForgeryKind::Random);
            }
        }
        let ind = eer_individual(&s, ForgeryFilter::All).unwrap();
        let gen = eer_general(&s, ForgeryFilter::All).unwrap();
        assert_eq!(ind.mean, 0.0);
        assert!(gen.eer > 0.0);
    }

    #[test]
    fn individual_can_exceed_general() {
        // Each user's scores are inverted; pooling lets the other user's scores
        // dilute the overlap, so the mean of per-user EERs is not bounded by the
        // shared-threshold EER in general.
        let mut s = ScoreSet::default();
        s.push_genuine(UserId(1), 1.0);
        s.push_impostor(UserId(1), 0.0, ForgeryKind::Random);
        s.push_genuine(UserId(2), 3.0);
        s.push_impostor(UserId(2), 2.0, ForgeryKind::Random);
        let ind = eer_individual(&s, ForgeryFilter::All).unwrap();
        let gen = eer_general(&s, ForgeryFilter::All).unwrap();
        assert_eq!(ind.mean, 1.0);
        assert_eq!(gen.eer, 0.5);
    }

    #[test]
    fn users_missing_a_class_are_excluded() {
        let mut s = set(&[1.0], &[2.0]);
        s.push_genuine(UserId(9), 1.0);
        let ind = eer_individual(&s, ForgeryFilter::All).unwrap();
        assert_eq!(ind.excluded, vec![UserId(9)]);
        assert_eq!(ind.per_user.len(), 1);
    }

    #[test]
    fn test_set_sizes() {
        let q = |p| SignificanceQuery {
            alpha: 0.05,
            beta: 0.2,
            p_hat: p,
        };
        assert_eq!(required_test_size(q(0.0089)).unwrap().1, 11_236);
        assert_eq!(required_test_size(q(1.0)).unwrap().0, 75);
        assert_eq!(required_test_size(q(0.10)).unwrap().1, 1000);
        assert!(required_test_size(q(0.0)).is_err());
        for p in [0.0003, 0.003, 0.0125, 0.0278, 0.1] {
            let (e, s) = required_test_size(q(p)).unwrap();
            assert!(e <= s);
        }
    }

    #[test]
    fn cost_model() {
        let b = benchmark_counts(5, 454, 454, 16, 1).unwrap();
        assert!((b.speedup_ratio - 47.3).abs() < 0.1, "{}", b.speedup_ratio);
        let b = benchmark_counts(5, 454, 454, 128, 3).unwrap();
        assert!((b.data_reduction - 17.7).abs() < 0.05);
        assert_eq!(b.storage_dtw, 2270);
        assert_eq!(b.storage_msvq, 384);
        let b = benchmark_counts(3, 100, 100, 100, 2).unwrap();
        assert!((b.speedup_ratio - 1.0).abs() < 1e-12);
        assert!(benchmark_counts(0, 1, 1, 1, 1).is_err());
    }

    fn arb_scores() -> impl Strategy<Value = ScoreSet> {
        (
            prop::collection::vec((0u32..4, 0i32..20), 1..30),
            prop::collection::vec((0u32..4, 0i32..20), 1..30),
        )
            .prop_map(|(g, i)| {
                let mut s = ScoreSet::default();
                for (u, v) in g {
                    s.push_genuine(UserId(u), v as f64 * 0.5);
                }
                for (u, v) in i {
                    s.push_impostor(UserId(u), v as f64 * 0.5, ForgeryKind::Random);
                }
                s
            })
    }

    proptest! {
        #[test]
        fn det_curve_is_monotone_and_matches_sweep(s in arb_scores()) {
            let curve = far_frr(&s, ForgeryFilter::All).unwrap();
            let g: Vec<f64> = s.genuine.iter().map(|x| x.score).collect();
            let i: Vec<f64> = s.impostor.iter().map(|x| x.score).collect();
            for w in curve.points.windows(2) {
                prop_assert!(w[0].threshold < w[1].threshold);
                prop_assert!(w[0].far <= w[1].far);
                prop_assert!(w[0].frr >= w[1].frr);
            }
            for p in &curve.points {
                prop_assert_eq!((p.far, p.frr), sweep(&g, &i, p.threshold));
            }
            let e = eer(&curve).unwrap().eer;
            prop_assert!((0.0..=1.0).contains(&e));
        }

        #[test]
        fn per_user_eer_bounded_at_shared_threshold(s in arb_scores()) {
            // At the shared EER threshold each user's own operating point is no
            // better than that user's individual EER allows.
            let gen = eer_general(&s, ForgeryFilter::All).unwrap();
            let ind = eer_individual(&s, ForgeryFilter::All);
            if let Ok(ind) = ind {
                for (u, e) in &ind.per_user {
                    let (far, frr) = s.for_user(*u).rates_at(gen.threshold, ForgeryFilter::All).unwrap();
                    prop_assert!(e.eer <= far.max(frr) + 1e-9);
                }
            }
        }
    }
}
