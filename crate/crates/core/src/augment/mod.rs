//! Vocabulary strategies that derive a new corpus from an existing one:
//! correction and pruning, synonym expansion, and back-translation.

mod correct;
mod synonym;
mod translate;

pub use correct::{
    correct, Corrected, CorrectionLog, CorrectionRules, MergeRule, MAX_EDIT_DISTANCE,
};
pub use synonym::{synonym_expand, Thesaurus};
pub use translate::{
    back_translate, BackTranslateOptions, BackTranslated, CaptionFailure, HttpTranslator,
    HttpTranslatorConfig, IdentityTranslator, MockTranslator, TranslateError, TranslationChain,
    Translator, API_KEY_ENV, DEFAULT_HOPS, SOURCE_LANGUAGE,
};
