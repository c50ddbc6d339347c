//! Test-time augmentation for factual probing of text-generation models.
//!
//! The pipeline is `dataset` → `augment` → `backend` → `aggregate` → `evaluate`:
//! a fact is rendered into a prompt, the prompt is paraphrased, every
//! paraphrase is sent to a generation backend, the returned beams are merged
//! into one answer with a confidence, and predictions are scored.

pub mod aggregate;
pub mod augment;
pub mod backend;
pub mod dataset;
pub mod evaluate;
