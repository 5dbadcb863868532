//! Scene matrix and attribute table against nested-loop cross-tabulation.

mod common;

use captext::confusion::{self, MatchOptions, SceneKeywords};
use captext::corpus::{LabelRecord, PredictionSet};
use common::SCENES;
use proptest::prelude::*;

const FILLER: [&str; 8] = [
    "a",
    "many",
    "green",
    "trees",
    "near",
    "the",
    "buildings",
    "ports",
];
const ATTRIBUTES: [&str; 4] = ["green", "tree", "building", "sea"];

fn keywords() -> SceneKeywords {
    let mut k = SceneKeywords::new();
    for s in SCENES {
        k.insert(s, &[]).unwrap();
    }
    k
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(SCENES.to_vec()).prop_map(String::from),
        prop::sample::select(SCENES.to_vec()).prop_map(|s| format!("{s}s")),
        prop::sample::select(FILLER.to_vec()).prop_map(String::from),
        prop::sample::select(ATTRIBUTES.to_vec()).prop_map(String::from),
    ]
}

fn image() -> impl Strategy<Value = (usize, Option<String>)> {
    (
        0..SCENES.len(),
        prop::option::weighted(
            0.9,
            prop::collection::vec(word(), 1..8).prop_map(|w| w.join(" ")),
        ),
    )
}

fn inputs(images: &[(usize, Option<String>)]) -> (PredictionSet, Vec<LabelRecord>) {
    let labels = images
        .iter()
        .enumerate()
        .map(|(i, (scene, _))| LabelRecord {
            image_id: format!("img{i:03}"),
            scene: SCENES[*scene].to_string(),
            objects: Default::default(),
        })
        .collect();
    let preds = images
        .iter()
        .enumerate()
        .filter_map(|(i, (_, c))| c.as_ref().map(|c| (format!("img{i:03}"), c.clone())))
        .collect();
    (preds, labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_nested_loops(images in prop::collection::vec(image(), 0..=100), fold_plural: bool) {
        let (preds, labels) = inputs(&images);
        let attrs: Vec<String> = ATTRIBUTES.iter().map(|s| s.to_string()).collect();
        let options = MatchOptions { fold_plural };
        let report = confusion::evaluate(&preds, &labels, &keywords(), &attrs, &options).unwrap();
        let want = common::cross_tab(&SCENES, &ATTRIBUTES, &images, fold_plural);
        prop_assert_eq!(&report.scene_matrix, &want.matrix);
        prop_assert_eq!(&report.attribute_table, &want.attributes);
        prop_assert_eq!(&report.per_scene_totals, &want.totals);

        let matrix_only = confusion::scene_matrix(&preds, &labels, &keywords(), &options).unwrap();
        prop_assert_eq!(&matrix_only.scene_matrix, &want.matrix);
        let table = confusion::attribute_table(&preds, &labels, &keywords(), &attrs, &options).unwrap();
        prop_assert_eq!(table, want.attributes);

        let missing = images.iter().filter(|(_, c)| c.is_none()).count();
        prop_assert_eq!(report.missing_predictions.len(), missing);
    }

    #[test]
    fn perfect_captioner_is_diagonal(scenes in prop::collection::vec(0..SCENES.len(), 1..=100)) {
        let images: Vec<_> = scenes
            .iter()
            .map(|&s| (s, Some(format!("a view of the {}", SCENES[s]))))
            .collect();
        let (preds, labels) = inputs(&images);
        let report = confusion::scene_matrix(&preds, &labels, &keywords(), &MatchOptions::default()).unwrap();
        for (i, row) in report.scene_matrix.iter().enumerate() {
            for (j, &cell) in row.iter().enumerate() {
                if i != j {
                    prop_assert_eq!(cell, 0);
                }
            }
            prop_assert_eq!(row[i], report.per_scene_totals[i]);
        }
        prop_assert_eq!(report.diagonal_accuracy, 1.0);
    }
}
