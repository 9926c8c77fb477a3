//! Aspect-based sentiment: backend classification, confidence-thresholded
//! silver candidates, the gold dataset, label distributions and macro-F1.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backend::wire::AbsaRequest;
use crate::backend::{BackendClient, BackendError, Route};
use crate::corpus::{read_jsonl, to_jsonl, write_atomic};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linking::{normalize_form, AspectGroup};
use crate::sampling::SeededRng;

pub const DEFAULT_SILVER_THRESHOLD: f64 = 0.75;
pub const DEFAULT_ABSA_WORKERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    /// Display order: Neg, Neut, Pos.
    pub const ALL: [SentimentLabel; 3] = [SentimentLabel::Negative, SentimentLabel::Neutral, SentimentLabel::Positive];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Positive => "positive",
        }
    }

    fn idx(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "negative" | "neg" => Ok(SentimentLabel::Negative),
            "neutral" | "neut" | "neu" => Ok(SentimentLabel::Neutral),
            "positive" | "pos" => Ok(SentimentLabel::Positive),
            other => Err(Error::Validation(format!("unknown sentiment label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentPrediction {
    pub label: SentimentLabel,
    pub confidence: f64,
}

impl SentimentPrediction {
    pub fn new(label: SentimentLabel, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Validation(format!("confidence {confidence} outside [0,1]")));
        }
        Ok(SentimentPrediction { label, confidence })
    }
}

/// A prediction together with the model version that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classified {
    pub prediction: SentimentPrediction,
    pub model_version: String,
}

/// Whether `aspect` occurs in `text`, either as a case-insensitive substring
/// or as a token with the same normalized form.
pub fn aspect_occurs(text: &str, aspect: &str) -> bool {
    let aspect_norm = normalize_form(aspect);
    if aspect_norm.is_empty() {
        return false;
    }
    text.to_lowercase().contains(&aspect.trim().to_lowercase())
        || text.split_whitespace().any(|w| normalize_form(w) == aspect_norm)
}

/// Classify one (sentence, aspect) pair. The precondition is checked before
/// any network call.
pub fn classify(client: &BackendClient, text: &str, aspect: &str) -> Result<Classified> {
    if !aspect_occurs(text, aspect) {
        return Err(Error::Precondition(format!("aspect {aspect:?} does not occur in {text:?}")));
    }
    let (resp, raw) = client.absa(&AbsaRequest {
        text: text.to_string(),
        aspect: aspect.to_string(),
    })?;
    let contract = |msg: String| Error::from(BackendError::contract(Route::Absa, msg, raw.clone()));
    let label: SentimentLabel = resp.label.parse().map_err(|e: Error| contract(e.to_string()))?;
    let prediction = SentimentPrediction::new(label, resp.confidence).map_err(|e| contract(e.to_string()))?;
    log::debug!(
        "absa aspect={aspect:?} label={label} confidence={:.3} model={}",
        prediction.confidence,
        resp.model_version
    );
    Ok(Classified {
        prediction,
        model_version: resp.model_version,
    })
}

/// Classifier with a request cache: identical (text, aspect) pairs hit the
/// backend once per classifier. One classifier should talk to one model
/// version.
pub struct AbsaClassifier<'a> {
    client: &'a BackendClient,
    cache: Mutex<HashMap<(String, String), Classified>>,
}

impl<'a> AbsaClassifier<'a> {
    pub fn new(client: &'a BackendClient) -> Self {
        AbsaClassifier {
            client,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn classify(&self, text: &str, aspect: &str) -> Result<Classified> {
        let key = (text.to_string(), aspect.to_string());
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let result = classify(self.client, text, aspect)?;
        self.cache.lock().expect("cache lock").insert(key, result.clone());
        Ok(result)
    }

    /// Fan out over a bounded pool; results keep input order.
    pub fn classify_batch(&self, pairs: &[(String, String)], exec: Execution) -> Vec<Result<Classified>> {
        exec.map(pairs, |(text, aspect)| self.classify(text, aspect))
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    BaseGold,
    SilverValidated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldExample {
    pub text: String,
    pub aspect: String,
    pub group: AspectGroup,
    pub label: SentimentLabel,
    pub provenance: Provenance,
}

impl GoldExample {
    pub fn validate(&self) -> Result<()> {
        if aspect_occurs(&self.text, &self.aspect) {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "gold example aspect {:?} does not occur in {:?}",
                self.aspect, self.text
            )))
        }
    }
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldExample>> {
    let gold: Vec<GoldExample> = read_jsonl(path)?;
    for g in &gold {
        g.validate()?;
    }
    Ok(gold)
}

pub fn write_gold(path: &Path, gold: &[GoldExample]) -> Result<()> {
    write_atomic(path, &to_jsonl(gold)?)?;
    Ok(())
}

/// An unlabeled (sentence, aspect) pair sent for silver labeling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SilverSource {
    pub text: String,
    pub aspect: String,
    pub group: AspectGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Pending,
    Accepted,
    Rejected,
}

/// A model-labeled example awaiting human review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilverCandidate {
    pub text: String,
    pub aspect: String,
    pub group: AspectGroup,
    pub label: SentimentLabel,
    pub provenance: Provenance,
    pub confidence: f64,
    pub status: ReviewStatus,
}

/// Keep predictions with `confidence >= threshold` as pending candidates.
pub fn bootstrap_silver(predictions: &[(SilverSource, SentimentPrediction)], threshold: f64) -> Result<Vec<SilverCandidate>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Precondition(format!("threshold must be in (0, 1], got {threshold}")));
    }
    Ok(predictions
        .iter()
        .filter(|(_, p)| p.confidence >= threshold)
        .map(|(src, p)| SilverCandidate {
            text: src.text.clone(),
            aspect: src.aspect.clone(),
            group: src.group,
            label: p.label,
            provenance: Provenance::SilverValidated,
            confidence: p.confidence,
            status: ReviewStatus::Pending,
        })
        .collect())
}

pub fn read_silver(path: &Path) -> Result<Vec<SilverCandidate>> {
    read_jsonl(path)
}

pub fn write_silver(path: &Path, silver: &[SilverCandidate]) -> Result<()> {
    write_atomic(path, &to_jsonl(silver)?)?;
    Ok(())
}

/// Append reviewer-accepted candidates to the gold set. Pending and
/// rejected candidates never enter it. Exact duplicates are skipped.
pub fn promote_accepted(gold: &[GoldExample], silver: &[SilverCandidate]) -> Result<Vec<GoldExample>> {
    let mut out = gold.to_vec();
    for c in silver.iter().filter(|c| c.status == ReviewStatus::Accepted) {
        let g = GoldExample {
            text: c.text.clone(),
            aspect: c.aspect.clone(),
            group: c.group,
            label: c.label,
            provenance: Provenance::SilverValidated,
        };
        g.validate()?;
        if !out.iter().any(|o| o.text == g.text && o.aspect == g.aspect) {
            out.push(g);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub neg: u64,
    pub neut: u64,
    pub pos: u64,
}

impl LabelCounts {
    pub fn new(neg: u64, neut: u64, pos: u64) -> Self {
        LabelCounts { neg, neut, pos }
    }

    pub fn add(&mut self, label: SentimentLabel) {
        match label {
            SentimentLabel::Negative => self.neg += 1,
            SentimentLabel::Neutral => self.neut += 1,
            SentimentLabel::Positive => self.pos += 1,
        }
    }

    pub fn get(&self, label: SentimentLabel) -> u64 {
        match label {
            SentimentLabel::Negative => self.neg,
            SentimentLabel::Neutral => self.neut,
            SentimentLabel::Positive => self.pos,
        }
    }

    pub fn total(&self) -> u64 {
        self.neg + self.neut + self.pos
    }

    pub fn merge(self, other: LabelCounts) -> LabelCounts {
        LabelCounts {
            neg: self.neg + other.neg,
            neut: self.neut + other.neut,
            pos: self.pos + other.pos,
        }
    }

    /// Shares in Neg, Neut, Pos order; `None` when empty.
    pub fn shares(&self) -> Option<[f64; 3]> {
        let t = self.total();
        (t > 0).then(|| SentimentLabel::ALL.map(|l| self.get(l) as f64 / t as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub rows: BTreeMap<AspectGroup, LabelCounts>,
}

impl LabelDistribution {
    pub fn grand_total(&self) -> LabelCounts {
        self.rows.values().fold(LabelCounts::default(), |a, b| a.merge(*b))
    }
}

/// Counts per aspect group and label; every group has a row.
pub fn label_distribution(gold: &[GoldExample]) -> LabelDistribution {
    let mut rows: BTreeMap<AspectGroup, LabelCounts> =
        AspectGroup::ALL.iter().map(|g| (*g, LabelCounts::default())).collect();
    for g in gold {
        rows.entry(g.group).or_default().add(g.label);
    }
    LabelDistribution { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScore {
    pub label: SentimentLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    /// `confusion[gold][predicted]` in Neg, Neut, Pos order.
    pub confusion: [[u64; 3]; 3],
    pub per_class: [ClassScore; 3],
    pub macro_f1: f64,
    pub accuracy: f64,
    /// Classes that appear in neither gold nor predictions.
    pub absent: Vec<SentimentLabel>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_report(predictions: &[SentimentLabel], gold: &[SentimentLabel]) -> Result<ClassificationReport> {
    if predictions.len() != gold.len() {
        return Err(Error::Precondition(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Precondition("macro-F1 needs at least one item".into()));
    }
    let mut confusion = [[0u64; 3]; 3];
    for (p, g) in predictions.iter().zip(gold) {
        confusion[g.idx()][p.idx()] += 1;
    }
    let per_class = SentimentLabel::ALL.map(|label| {
        let c = label.idx();
        let tp = confusion[c][c];
        let predicted: u64 = (0..3).map(|g| confusion[g][c]).sum();
        let support: u64 = confusion[c].iter().sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScore {
            label,
            precision,
            recall,
            f1,
            support,
        }
    });
    let absent: Vec<SentimentLabel> = SentimentLabel::ALL
        .into_iter()
        .filter(|l| {
            let c = l.idx();
            confusion[c].iter().sum::<u64>() == 0 && (0..3).map(|g| confusion[g][c]).sum::<u64>() == 0
        })
        .collect();
    let correct: u64 = (0..3).map(|c| confusion[c][c]).sum();
    Ok(ClassificationReport {
        confusion,
        macro_f1: per_class.iter().map(|s| s.f1).sum::<f64>() / 3.0,
        accuracy: ratio(correct, gold.len() as u64),
        per_class,
        absent,
    })
}

/// Unweighted mean of per-class F1 over the fixed three-class set. A class
/// missing from both sides scores 0 and is logged.
pub fn macro_f1(predictions: &[SentimentLabel], gold: &[SentimentLabel]) -> Result<f64> {
    let report = classification_report(predictions, gold)?;
    for label in &report.absent {
        log::warn!("class {label} absent from gold and predictions; its F1 counts as 0");
    }
    Ok(report.macro_f1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { dev: 0.1, test: 0.1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<GoldExample>,
    pub dev: Vec<GoldExample>,
    pub test: Vec<GoldExample>,
}

/// Split stratified by (group, label). Each stratum is put in canonical
/// order, shuffled with the seeded generator, and cut by rounded fractions,
/// so the split depends only on the example set and the seed.
pub fn stratified_split(gold: &[GoldExample], fractions: SplitFractions, seed: u64) -> Result<DatasetSplit> {
    if fractions.dev < 0.0 || fractions.test < 0.0 || fractions.dev + fractions.test >= 1.0 {
        return Err(Error::Precondition(format!("invalid split fractions {fractions:?}")));
    }
    let mut strata: BTreeMap<(AspectGroup, SentimentLabel), Vec<&GoldExample>> = BTreeMap::new();
    for g in gold {
        strata.entry((g.group, g.label)).or_default().push(g);
    }
    let mut rng = SeededRng::new(seed);
    let mut split = DatasetSplit {
        seed,
        ..Default::default()
    };
    for members in strata.values_mut() {
        members.sort_by(|a, b| (&a.text, &a.aspect).cmp(&(&b.text, &b.aspect)));
        rng.shuffle(members);
        let n = members.len();
        let n_test = (n as f64 * fractions.test).round() as usize;
        let n_dev = ((n as f64 * fractions.dev).round() as usize).min(n - n_test);
        split.test.extend(members[..n_test].iter().map(|g| (*g).clone()));
        split.dev.extend(members[n_test..n_test + n_dev].iter().map(|g| (*g).clone()));
        split.train.extend(members[n_test + n_dev..].iter().map(|g| (*g).clone()));
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::stub::StubAbsa;
    use crate::backend::StubScript;
    use proptest::prelude::*;
    use SentimentLabel::*;

    fn src(text: &str) -> SilverSource {
        SilverSource {
            text: text.into(),
            aspect: "IDF".into(),
            group: AspectGroup::Israel,
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        let preds: Vec<_> = [0.74, 0.75, 0.76]
            .iter()
            .map(|&c| (src("IDF"), SentimentPrediction::new(Neutral, c).unwrap()))
            .collect();
        let kept = bootstrap_silver(&preds, 0.75).unwrap();
        assert_eq!(kept.iter().map(|c| c.confidence).collect::<Vec<_>>(), vec![0.75, 0.76]);
        assert!(kept.iter().all(|c| c.status == ReviewStatus::Pending));
        assert!(bootstrap_silver(&preds, 1.0).unwrap().is_empty());
        assert!(bootstrap_silver(&preds, 0.0).is_err());
        assert!(bootstrap_silver(&preds, 1.5).is_err());
    }

    #[test]
    fn only_accepted_candidates_are_promoted() {
        let preds = vec![
            (src("The IDF moved."), SentimentPrediction::new(Neutral, 0.9).unwrap()),
            (src("IDF again."), SentimentPrediction::new(Negative, 0.9).unwrap()),
            (src("IDF three."), SentimentPrediction::new(Positive, 0.9).unwrap()),
        ];
        let mut silver = bootstrap_silver(&preds, 0.75).unwrap();
        assert!(promote_accepted(&[], &silver).unwrap().is_empty());
        silver[0].status = ReviewStatus::Accepted;
        silver[1].status = ReviewStatus::Rejected;
        let gold = promote_accepted(&[], &silver).unwrap();
        assert_eq!(gold.len(), 1);
        assert_eq!(gold[0].provenance, Provenance::SilverValidated);
        assert_eq!(promote_accepted(&gold, &silver).unwrap().len(), 1, "idempotent");
    }

    #[test]
    fn classify_checks_precondition_before_calling() {
        let mut script = StubScript::default();
        script.disabled_routes.push("/absa".into());
        let client = BackendClient::stub(script);
        let err = classify(&client, "The weather is nice", "IDF").unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "no network call made: {err:?}");
    }

    #[test]
    fn classify_passes_through_backend_answer() {
        let mut script = StubScript::default();
        script.absa.push(StubAbsa {
            text: "Hamas is here".into(),
            aspect: "Hamas".into(),
            label: "neutral".into(),
            confidence: 0.5,
        });
        let client = BackendClient::stub(script);
        let c = classify(&client, "Hamas is here", "Hamas").unwrap();
        assert_eq!(c.prediction, SentimentPrediction { label: Neutral, confidence: 0.5 });
    }

    #[test]
    fn out_of_range_confidence_is_a_contract_violation() {
        let mut script = StubScript::default();
        script.absa.push(StubAbsa {
            text: "Hamas".into(),
            aspect: "Hamas".into(),
            label: "neutral".into(),
            confidence: 1.5,
        });
        let client = BackendClient::stub(script);
        assert!(matches!(
            classify(&client, "Hamas", "Hamas"),
            Err(Error::Backend(BackendError::Contract { .. }))
        ));
    }

    #[test]
    fn classifier_caches_identical_requests() {
        let client = BackendClient::stub(StubScript::default());
        let c = AbsaClassifier::new(&client);
        let pairs = vec![("Israel strikes.".to_string(), "Israel".to_string()); 5];
        let out = c.classify_batch(&pairs, Execution::bounded(DEFAULT_ABSA_WORKERS));
        assert!(out.iter().all(|r| r.is_ok()));
        assert_eq!(c.cached(), 1);
    }

    #[test]
    fn macro_f1_hand_computed() {
        let gold = [Negative, Negative, Positive, Positive];
        let pred = [Negative, Positive, Positive, Positive];
        let f = macro_f1(&pred, &gold).unwrap();
        assert!((f - (2.0 / 3.0 + 0.0 + 0.8) / 3.0).abs() < 1e-12);
        let gold9 = [Negative, Negative, Negative, Neutral, Neutral, Neutral, Positive, Positive, Positive];
        let pred9 = [Negative; 9];
        assert!((macro_f1(&pred9, &gold9).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!(macro_f1(&[Negative], &[]).is_err());
        assert!(macro_f1(&[], &[]).is_err());
    }

    #[test]
    fn label_distribution_has_every_group() {
        let d = label_distribution(&[]);
        assert_eq!(d.rows.len(), 10);
        assert_eq!(d.grand_total().total(), 0);
    }

    fn gold(group: AspectGroup, label: SentimentLabel, i: usize) -> GoldExample {
        GoldExample {
            text: format!("sentence {i} about Israel"),
            aspect: "Israel".into(),
            group,
            label,
            provenance: Provenance::BaseGold,
        }
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let mut data = Vec::new();
        for (i, label) in SentimentLabel::ALL.iter().cycle().take(300).enumerate() {
            data.push(gold(if i % 2 == 0 { AspectGroup::Israel } else { AspectGroup::Gaza }, *label, i));
        }
        let a = stratified_split(&data, SplitFractions::default(), 9).unwrap();
        let mut reversed = data.clone();
        reversed.reverse();
        let b = stratified_split(&reversed, SplitFractions::default(), 9).unwrap();
        assert_eq!(a.test, b.test, "input order does not matter");
        assert_eq!(a.train.len() + a.dev.len() + a.test.len(), 300);
        // six strata of 50: 5 test, 5 dev each
        assert_eq!(a.test.len(), 30);
        assert_eq!(a.dev.len(), 30);
        let c = stratified_split(&data, SplitFractions::default(), 10).unwrap();
        assert_ne!(a.test, c.test);
    }

    fn label_strategy() -> impl Strategy<Value = SentimentLabel> {
        prop_oneof![Just(Negative), Just(Neutral), Just(Positive)]
    }

    proptest! {
        #[test]
        fn threshold_monotone(confs in proptest::collection::vec(0.0f64..=1.0, 0..40), t1 in 0.01f64..=1.0, t2 in 0.01f64..=1.0) {
            let preds: Vec<_> = confs.iter().map(|&c| (src("IDF"), SentimentPrediction::new(Neutral, c).unwrap())).collect();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(bootstrap_silver(&preds, hi).unwrap().len() <= bootstrap_silver(&preds, lo).unwrap().len());
        }

        #[test]
        fn macro_f1_invariant_under_relabeling(pairs in proptest::collection::vec((label_strategy(), label_strategy()), 1..40), perm in Just(()).prop_perturb(|_, mut rng| {
            let mut p = [0usize, 1, 2];
            for i in (1..3).rev() { p.swap(i, (rng.next_u32() as usize) % (i + 1)); }
            p
        })) {
            let relabel = |l: SentimentLabel| SentimentLabel::ALL[perm[l.idx()]];
            let (pred, gold): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
            let pred2: Vec<_> = pred.iter().map(|&l| relabel(l)).collect();
            let gold2: Vec<_> = gold.iter().map(|&l| relabel(l)).collect();
            let a = macro_f1(&pred, &gold).unwrap();
            let b = macro_f1(&pred2, &gold2).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn diagonal_confusion_gives_accuracy(counts in (1usize..10, 1usize..10, 1usize..10)) {
            let gold: Vec<_> = std::iter::repeat_n(Negative, counts.0)
                .chain(std::iter::repeat_n(Neutral, counts.1))
                .chain(std::iter::repeat_n(Positive, counts.2))
                .collect();
            let r = classification_report(&gold, &gold).unwrap();
            prop_assert!((r.macro_f1 - r.accuracy).abs() < 1e-12);
        }

        #[test]
        fn label_distribution_rows_reconcile(items in proptest::collection::vec((0usize..10, label_strategy()), 0..60)) {
            let gold: Vec<_> = items.iter().enumerate().map(|(i, (g, l))| gold(AspectGroup::ALL[*g], *l, i)).collect();
            let d = label_distribution(&gold);
            prop_assert_eq!(d.grand_total().total(), gold.len() as u64);
            let mut rev = gold.clone();
            rev.reverse();
            prop_assert_eq!(label_distribution(&rev), d);
        }
    }
}
