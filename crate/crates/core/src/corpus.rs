//! Labeled utterances, synthetic corpus generation, and ASR-noise simulation.
//!
//! Real classroom transcripts are not redistributable, so experiments run on
//! synthetic corpora: per-category utterance templates instantiated with slot
//! fillers and passed through a character-level noise channel calibrated to a
//! target character error rate (CER). CER is operationalized as Levenshtein
//! character edit distance divided by clean-text length.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::rng::{derive_seed, Rng};
use crate::taxonomy::{CategoryLabel, CATEGORY_COUNT, CATEGORY_NAMES};

/// Dataset split assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn parse(value: &str) -> Result<Self> {
        match value {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(CoreError::InvalidConfig(format!(
                "unknown split {other:?} (expected train, validation, or test)"
            ))),
        }
    }
}

/// One utterance with its category label and split assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub uid: String,
    pub text: String,
    pub label: CategoryLabel,
    pub split: Split,
}

impl LabeledExample {
    /// Builds an example, rejecting text that is empty after trimming.
    pub fn new(uid: String, text: String, label: CategoryLabel, split: Split) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(CoreError::EmptyText { uid });
        }
        Ok(LabeledExample {
            uid,
            text,
            label,
            split,
        })
    }
}

/// An in-memory dataset with unique uids, ordered as loaded.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    by_uid: BTreeMap<String, usize>,
}

impl Dataset {
    /// Validates uid uniqueness and builds the lookup index.
    pub fn from_examples(examples: Vec<LabeledExample>) -> Result<Self> {
        let mut by_uid = BTreeMap::new();
        for (i, ex) in examples.iter().enumerate() {
            if by_uid.insert(ex.uid.clone(), i).is_some() {
                return Err(CoreError::DuplicateUid {
                    uid: ex.uid.clone(),
                });
            }
        }
        Ok(Dataset { examples, by_uid })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn get(&self, uid: &str) -> Option<&LabeledExample> {
        self.by_uid.get(uid).map(|&i| &self.examples[i])
    }

    /// Examples of one split, in dataset order.
    pub fn split(&self, split: Split) -> Vec<&LabeledExample> {
        self.examples.iter().filter(|e| e.split == split).collect()
    }
}

/// Character-noise configuration. Edit types are sampled by weight; the
/// expected edit rate per clean character equals `target_cer`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub target_cer: f64,
    pub substitution_weight: f64,
    pub deletion_weight: f64,
    pub insertion_weight: f64,
    pub rng_seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            target_cer: 0.0,
            substitution_weight: 0.6,
            deletion_weight: 0.2,
            insertion_weight: 0.2,
            rng_seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.target_cer) {
            return Err(CoreError::InvalidConfig(format!(
                "noise.target_cer must lie in [0, 1), got {}",
                self.target_cer
            )));
        }
        let weights = [
            self.substitution_weight,
            self.deletion_weight,
            self.insertion_weight,
        ];
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(CoreError::InvalidConfig(
                "noise edit weights must be nonnegative".to_string(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CoreError::InvalidConfig(format!(
                "noise edit weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Corrupts `text` through the character channel. Each clean character is
/// substituted, deleted, or kept; an insertion may follow each position.
/// Substituted and inserted characters are drawn uniformly from `inventory`.
/// Never returns a string that trims to empty.
pub(crate) fn corrupt(text: &str, noise: &NoiseSpec, inventory: &[char], rng: &mut Rng) -> String {
    let cer = noise.target_cer;
    let sub_p = cer * noise.substitution_weight;
    let del_p = cer * noise.deletion_weight;
    let ins_p = cer * noise.insertion_weight;

    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        let u = rng.next_f64();
        if u < sub_p && !inventory.is_empty() {
            out.push(inventory[rng.below(inventory.len())]);
        } else if u < sub_p + del_p {
            // deleted
        } else {
            out.push(c);
        }
        if rng.next_f64() < ins_p && !inventory.is_empty() {
            out.push(inventory[rng.below(inventory.len())]);
        }
    }
    if out.trim().is_empty() {
        // retain one character rather than emit an empty utterance
        if let Some(c) = text.chars().find(|c| !c.is_whitespace()) {
            out.clear();
            out.push(c);
        }
    }
    out
}

/// Sorted, deduplicated character inventory of a set of strings.
fn char_inventory<'a>(texts: impl Iterator<Item = &'a str>) -> Vec<char> {
    let mut chars: Vec<char> = texts.flat_map(|t| t.chars()).collect();
    chars.sort_unstable();
    chars.dedup();
    chars
}

/// Applies the noise channel to one string, deterministic in `noise.rng_seed`.
/// The substitution/insertion inventory is the input's own character set.
pub fn apply_asr_noise(text: &str, noise: &NoiseSpec) -> Result<String> {
    if text.is_empty() {
        return Err(CoreError::EmptyInput("text"));
    }
    noise.validate()?;
    let inventory = char_inventory(core::iter::once(text));
    let mut rng = Rng::seed_from(noise.rng_seed);
    Ok(corrupt(text, noise, &inventory, &mut rng))
}

/// Levenshtein distance in characters (unit costs).
pub fn char_edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Realized character error rate of one (clean, noisy) pair.
pub fn character_error_rate(clean: &str, noisy: &str) -> f64 {
    let len = clean.chars().count();
    if len == 0 {
        return 0.0;
    }
    char_edit_distance(clean, noisy) as f64 / len as f64
}

/// Per-class utterance templates plus shared slot fillers.
///
/// Templates may contain `{slot}` placeholders; instantiation picks a
/// template uniformly and fills each placeholder uniformly from the named
/// filler list.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    per_class: Vec<Vec<String>>,
    slots: BTreeMap<String, Vec<String>>,
}

impl TemplateSet {
    /// Validates one non-empty template list per category and that every
    /// placeholder names a non-empty filler list.
    pub fn new(per_class: Vec<Vec<String>>, slots: BTreeMap<String, Vec<String>>) -> Result<Self> {
        if per_class.len() != CATEGORY_COUNT {
            return Err(CoreError::InvalidConfig(format!(
                "templates must cover all {CATEGORY_COUNT} categories, got {}",
                per_class.len()
            )));
        }
        for (class, templates) in per_class.iter().enumerate() {
            if templates.is_empty() {
                return Err(CoreError::MissingTemplates {
                    category: CATEGORY_NAMES[class],
                });
            }
            for t in templates {
                if t.trim().is_empty() {
                    return Err(CoreError::InvalidConfig(format!(
                        "empty template in category {:?}",
                        CATEGORY_NAMES[class]
                    )));
                }
                for slot in placeholders(t) {
                    match slots.get(&slot) {
                        Some(fillers) if !fillers.is_empty() => {}
                        _ => {
                            return Err(CoreError::InvalidConfig(format!(
                                "template {t:?} references slot {slot:?} with no fillers"
                            )));
                        }
                    }
                }
            }
        }
        Ok(TemplateSet { per_class, slots })
    }

    pub fn templates_for(&self, label: CategoryLabel) -> &[String] {
        &self.per_class[label.id()]
    }

    /// All characters that can occur in instantiated templates.
    pub fn inventory(&self) -> Vec<char> {
        char_inventory(
            self.per_class
                .iter()
                .flatten()
                .map(String::as_str)
                .chain(self.slots.values().flatten().map(String::as_str)),
        )
    }

    /// Instantiates one template of `label` with slot fillers.
    pub fn instantiate(&self, label: CategoryLabel, rng: &mut Rng) -> String {
        let templates = &self.per_class[label.id()];
        let template = &templates[rng.below(templates.len())];
        let mut out = String::with_capacity(template.len());
        let mut rest = template.as_str();
        while let Some(open) = rest.find('{') {
            let (head, tail) = rest.split_at(open);
            out.push_str(head);
            if let Some(close) = tail.find('}') {
                let slot = &tail[1..close];
                // validated at construction
                let fillers = &self.slots[slot];
                out.push_str(&fillers[rng.below(fillers.len())]);
                rest = &tail[close + 1..];
            } else {
                out.push_str(tail);
                rest = "";
            }
        }
        out.push_str(rest);
        out
    }

    /// The built-in classroom template set used by default configurations.
    ///
    /// Templates are composed from a pool of shared scaffold openers and
    /// per-category core phrasings, so most characters of any utterance are
    /// common across categories and the class signal rides on a few marker
    /// characters. Several cores are deliberately near-identical across
    /// category pairs (repeating/reviewing, note-taking/summarization,
    /// guidance/example-giving), differing in one or two marker characters
    /// that the noise channel corrupts like any others.
    pub fn builtin() -> Self {
        let slots: BTreeMap<String, Vec<String>> = [
            ("subject", vec!["数学", "语文", "英语", "物理", "化学"]),
            (
                "topic",
                vec![
                    "方程", "分数", "古诗", "单词", "语法", "公式", "课文", "实验",
                ],
            ),
            ("name", vec!["小明", "小红", "小刚", "小丽"]),
            ("praise", vec!["棒", "好", "出色", "认真"]),
            ("number", vec!["一", "二", "三", "五", "十"]),
        ]
        .into_iter()
        .map(|(k, v)| {
            (
                k.to_string(),
                v.into_iter().map(ToString::to_string).collect(),
            )
        })
        .collect();

        // openers shared by every category
        let openers = [
            "同学们",
            "大家",
            "我们",
            "好现在",
            "那么接下来",
            "来同学们",
            "现在",
            "",
        ];

        let cores: Vec<Vec<&str>> = vec![
            // greeting
            vec![
                "大家好欢迎来到{subject}课",
                "下午好今天继续学{subject}",
                "早上好请坐好我们准备上课",
                "好新的一节{subject}课开始了",
                "好很高兴又见到大家",
                "上课了请安静",
                "好今天我们上{subject}",
            ],
            // commending
            vec![
                "{name}回答得真{praise}给他鼓掌",
                "这位同学做得很{praise}继续保持",
                "今天的表现都特别{praise}",
                "{name}这道{topic}题做对了真{praise}",
                "回答得太{praise}了为你点赞",
                "这个思路很{praise}值得表扬",
                "这节课听得很{praise}",
            ],
            // guidance
            vec![
                "想一想这道{topic}题该怎么做",
                "先自己思考一下这个{topic}",
                "试着把这个{topic}做一做",
                "{name}你来说说这道题的思路",
                "一步一步来分析这个{topic}",
                "想想为什么这个{topic}要这样做",
                "把这个{topic}自己过一遍",
                "来看这个{topic}怎么做",
            ],
            // example-giving
            vec![
                "比如说这个{topic}就是个例子",
                "来看一个{topic}的例子",
                "举个例子{name}有{number}个苹果",
                "打个比方这就像{topic}",
                "再看一个例子这个{topic}也一样",
                "再举一个{topic}的例子注意看",
                "像这样的{topic}题再看一道",
                "来看这个{topic}比如说",
            ],
            // repeating
            vec![
                "我再说一遍这个{topic}很重要",
                "这句话再重复一次",
                "注意听把这个{topic}再讲一遍",
                "再强调一遍刚才讲的{topic}",
                "跟老师再读一遍这个{topic}",
                "没听清的我再念一遍",
                "这个重点内容我再说一次",
                "把{topic}再过一遍",
            ],
            // reviewing
            vec![
                "来回顾一下上节课学的{topic}",
                "先复习一下之前讲过的{topic}",
                "上节课的{topic}还记得吗",
                "把前面学过的{topic}温习一遍",
                "开始新课之前先回顾一下{topic}",
                "想想上次学的{topic}是什么",
                "把学过的{topic}再看一下",
                "把{topic}再温一遍",
            ],
            // note-taking
            vec![
                "把这个{topic}记在笔记本上",
                "这个要点要做好笔记",
                "拿出笔记本把{topic}抄下来",
                "{topic}请记笔记这里要考",
                "把黑板上的{topic}记录下来",
                "笔记本上记一下这个{topic}",
                "这个重点内容记下来",
                "这个{topic}是重点记一下",
            ],
            // summarization
            vec![
                "来总结一下今天学的{topic}",
                "这节课的内容归纳为{number}点",
                "最后把{topic}梳理总结一遍",
                "谁能概括一下这段{topic}的大意",
                "今天的{topic}总结起来就是一句话",
                "一起归纳一下{topic}的规律",
                "把这节课的重点内容整理一下",
                "这个{topic}是重点理一下",
            ],
            // others
            vec![
                "下课铃响了今天就到这里",
                "课后把作业发到群里",
                "麦克风好像有点问题稍等",
                "这道{topic}题出现在去年的考试里",
                "{name}你的摄像头没有打开",
                "喝口水休息{number}分钟",
                "{subject}书翻到第{number}页",
                "今天网络不太稳定",
                "这节课时间不多了加快一点",
            ],
        ];

        let per_class: Vec<Vec<String>> = cores
            .into_iter()
            .map(|class_cores| {
                let mut templates = Vec::with_capacity(openers.len() * class_cores.len());
                for core in class_cores {
                    for opener in openers {
                        templates.push(format!("{opener}{core}"));
                    }
                }
                templates
            })
            .collect();
        TemplateSet::new(per_class, slots).expect("builtin templates are valid")
    }
}

/// Extracts `{slot}` names from a template.
fn placeholders(template: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let tail = &rest[open..];
        if let Some(close) = tail.find('}') {
            names.push(tail[1..close].to_string());
            rest = &tail[close + 1..];
        } else {
            break;
        }
    }
    names
}

/// Fractions of each class routed to the train and validation splits; the
/// remainder is the test split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.7,
            validation: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        if self.train < 0.0 || self.validation < 0.0 || self.train + self.validation > 1.0 {
            return Err(CoreError::InvalidConfig(format!(
                "split fractions must be nonnegative and sum to at most 1, got train={} validation={}",
                self.train, self.validation
            )));
        }
        Ok(())
    }
}

/// A generated corpus plus the realized noise level measured against the
/// clean template instantiations.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub examples: Vec<LabeledExample>,
    /// Total edit distance over total clean characters.
    pub realized_cer: f64,
    pub clean_chars: usize,
    pub edit_distance: usize,
}

/// Generates exactly `n_per_class` examples for every category, split
/// stratified per `fractions`, noised through the template-wide character
/// inventory. Deterministic in `rng_seed`; each example owns an independent
/// derived stream, so output does not depend on generation order.
pub fn generate_synthetic_corpus(
    n_per_class: usize,
    templates: &TemplateSet,
    noise: &NoiseSpec,
    rng_seed: u64,
    fractions: SplitFractions,
) -> Result<GeneratedCorpus> {
    if n_per_class == 0 {
        return Err(CoreError::InvalidConfig(
            "n_per_class must be at least 1".to_string(),
        ));
    }
    noise.validate()?;
    fractions.validate()?;

    let inventory = templates.inventory();
    let n_train = libm::round(n_per_class as f64 * fractions.train) as usize;
    let n_val = libm::round(n_per_class as f64 * fractions.validation) as usize;
    let (n_train, n_val) = if n_train + n_val > n_per_class {
        (
            n_train.min(n_per_class),
            n_per_class - n_train.min(n_per_class),
        )
    } else {
        (n_train, n_val)
    };

    let mut examples = Vec::with_capacity(n_per_class * CATEGORY_COUNT);
    let mut clean_chars = 0usize;
    let mut edit_distance = 0usize;
    for label in CategoryLabel::all() {
        for i in 0..n_per_class {
            let stream = (label.id() * n_per_class + i) as u64;
            let mut rng = Rng::seed_from(derive_seed(rng_seed, stream));
            let clean = templates.instantiate(label, &mut rng);
            let noisy = corrupt(&clean, noise, &inventory, &mut rng);
            clean_chars += clean.chars().count();
            edit_distance += char_edit_distance(&clean, &noisy);
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
            let uid = format!("synth-{}-{i:05}", label.name());
            examples.push(LabeledExample::new(uid, noisy, label, split)?);
        }
    }
    let realized_cer = if clean_chars == 0 {
        0.0
    } else {
        edit_distance as f64 / clean_chars as f64
    };
    Ok(GeneratedCorpus {
        examples,
        realized_cer,
        clean_chars,
        edit_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(cer: f64, seed: u64) -> NoiseSpec {
        NoiseSpec {
            target_cer: cer,
            rng_seed: seed,
            ..NoiseSpec::default()
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let text = "请大家做好笔记";
        assert_eq!(apply_asr_noise(text, &spec(0.0, 42)).unwrap(), text);
    }

    #[test]
    fn noise_rejects_empty_text() {
        assert_eq!(
            apply_asr_noise("", &spec(0.1, 1)).unwrap_err(),
            CoreError::EmptyInput("text")
        );
    }

    #[test]
    fn single_char_never_empties() {
        for seed in 0..200 {
            let out = apply_asr_noise("好", &spec(0.9, seed)).unwrap();
            assert!(!out.trim().is_empty(), "seed {seed} emptied the string");
        }
    }

    #[test]
    fn noise_is_deterministic() {
        let text = "我们来总结一下今天学的方程";
        let a = apply_asr_noise(text, &spec(0.3, 7)).unwrap();
        let b = apply_asr_noise(text, &spec(0.3, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(char_edit_distance("", ""), 0);
        assert_eq!(char_edit_distance("abc", "abc"), 0);
        assert_eq!(char_edit_distance("abc", ""), 3);
        assert_eq!(char_edit_distance("kitten", "sitting"), 3);
        assert_eq!(char_edit_distance("笔记本", "笔机本"), 1);
    }

    #[test]
    fn invalid_noise_specs_rejected() {
        assert!(spec(1.5, 0).validate().is_err());
        assert!(spec(1.0, 0).validate().is_err());
        let bad_weights = NoiseSpec {
            target_cer: 0.1,
            substitution_weight: 0.5,
            deletion_weight: 0.2,
            insertion_weight: 0.2,
            rng_seed: 0,
        };
        assert!(bad_weights.validate().is_err());
    }

    #[test]
    fn dataset_rejects_duplicate_uids() {
        let label = CategoryLabel::from_id(0).unwrap();
        let mk = |uid: &str| {
            LabeledExample::new(uid.into(), "大家好".into(), label, Split::Train).unwrap()
        };
        let err = Dataset::from_examples(vec![mk("a1"), mk("a1")]).unwrap_err();
        assert_eq!(err, CoreError::DuplicateUid { uid: "a1".into() });
    }

    #[test]
    fn example_rejects_blank_text() {
        let label = CategoryLabel::from_id(0).unwrap();
        let err =
            LabeledExample::new("a1".into(), "  \t ".into(), label, Split::Train).unwrap_err();
        assert_eq!(err, CoreError::EmptyText { uid: "a1".into() });
    }

    #[test]
    fn synthetic_counts_are_exact() {
        let templates = TemplateSet::builtin();
        let corpus =
            generate_synthetic_corpus(10, &templates, &spec(0.1, 3), 9, SplitFractions::default())
                .unwrap();
        assert_eq!(corpus.examples.len(), 90);
        for label in CategoryLabel::all() {
            let count = corpus.examples.iter().filter(|e| e.label == label).count();
            assert_eq!(count, 10, "class {label}");
        }
        // uids unique
        Dataset::from_examples(corpus.examples).unwrap();
    }

    #[test]
    fn synthetic_generation_is_deterministic() {
        let templates = TemplateSet::builtin();
        let a =
            generate_synthetic_corpus(5, &templates, &spec(0.2, 3), 11, SplitFractions::default())
                .unwrap();
        let b =
            generate_synthetic_corpus(5, &templates, &spec(0.2, 3), 11, SplitFractions::default())
                .unwrap();
        assert_eq!(a.examples, b.examples);
        assert_eq!(a.edit_distance, b.edit_distance);
    }

    #[test]
    fn missing_templates_named() {
        let mut per_class: Vec<Vec<String>> = (0..CATEGORY_COUNT)
            .map(|_| vec!["大家好".to_string()])
            .collect();
        per_class[2].clear();
        let err = TemplateSet::new(per_class, BTreeMap::new()).unwrap_err();
        assert_eq!(
            err,
            CoreError::MissingTemplates {
                category: "guidance"
            }
        );
    }

    #[test]
    fn unknown_slot_rejected() {
        let per_class: Vec<Vec<String>> = (0..CATEGORY_COUNT)
            .map(|_| vec!["看这个{gadget}".to_string()])
            .collect();
        assert!(TemplateSet::new(per_class, BTreeMap::new()).is_err());
    }

    #[test]
    fn split_fractions_partition_each_class() {
        let templates = TemplateSet::builtin();
        let corpus =
            generate_synthetic_corpus(20, &templates, &spec(0.0, 0), 5, SplitFractions::default())
                .unwrap();
        let greeting = CategoryLabel::from_id(0).unwrap();
        let of = |s: Split| {
            corpus
                .examples
                .iter()
                .filter(|e| e.label == greeting && e.split == s)
                .count()
        };
        assert_eq!(of(Split::Train), 14);
        assert_eq!(of(Split::Validation), 3);
        assert_eq!(of(Split::Test), 3);
    }
}
