//! The evaluation metric protocol: answer normalization, VQA consensus
//! accuracy, exact match, BLEU-1..4, ROUGE-L, METEOR (exact+stem stages
//! only), and plain CIDEr.

mod accuracy;
mod bleu;
mod cider;
mod meteor;
mod normalize;
mod report;
mod rouge;
mod stem;

pub use accuracy::{exact_match_accuracy, vqa_consensus_accuracy};
pub use bleu::bleu;
pub use cider::cider;
pub use meteor::{meteor_lite, meteor_lite_corpus};
pub use normalize::{normalize_answer, tokenize_caption, TokenSequence};
pub use report::{evaluate_run, EvalReport, Metric, PredictionRun, RecordScore};
pub use rouge::{rouge_l, rouge_l_corpus, rouge_l_single, DEFAULT_BETA};
pub use stem::stem;
