mod common;

use gridprobe::level::TextEntry;
use gridprobe::probe::{grade, AnswerType, GroundTruth, ProbeRegistry, Verdict};
use gridprobe::trajectory::{replay, LevelLibrary};
use proptest::prelude::*;

fn truth_of(variant: usize) -> BoxedStrategy<(GroundTruth, AnswerType)> {
    let word = prop::sample::select(vec![
        "red",
        "blue",
        "open",
        "locked",
        "burning",
        "blue ball",
        "empty",
        "not reached",
    ]);
    match variant {
        0 => any::<bool>()
            .prop_map(|b| (GroundTruth::YesNo(b), AnswerType::Presence))
            .boxed(),
        1 => (0u64..60)
            .prop_map(|n| (GroundTruth::Count(n), AnswerType::Count))
            .boxed(),
        2 => word
            .prop_map(|w| (GroundTruth::Attribute(w.into()), AnswerType::State))
            .boxed(),
        3 => word
            .prop_map(|w| (GroundTruth::Causal(w.into()), AnswerType::Causal))
            .boxed(),
        4 => (0i64..10, -6i64..7)
            .prop_map(|(a, l)| {
                (
                    GroundTruth::Location {
                        steps_ahead: a,
                        lateral: l,
                    },
                    AnswerType::Location,
                )
            })
            .boxed(),
        _ => Just((GroundTruth::CannotDetermine, AnswerType::Uncertainty)).boxed(),
    }
}

fn truth() -> impl Strategy<Value = (GroundTruth, AnswerType)> {
    (0usize..6).prop_flat_map(truth_of)
}

/// Two truths of the same kind, equal about a third of the time.
fn pair() -> impl Strategy<Value = (GroundTruth, GroundTruth, AnswerType)> {
    (0usize..5)
        .prop_flat_map(|v| (truth_of(v), truth_of(v), 0u8..3))
        .prop_map(|((a, ty), (b, _), same)| {
            let b = if same == 0 { a.clone() } else { b };
            (a, b, ty)
        })
}

/// Surface forms a compliant model might wrap its answer in.
fn dress(answer: &str, style: u8) -> String {
    match style % 5 {
        0 => format!("ANSWER: {answer}"),
        1 => format!("Let me look.\nThe view shows things.\n\nanswer: {answer}"),
        2 => format!("**Answer:** {answer}"),
        3 => format!("ANSWER: \"{answer}\"."),
        _ => answer.to_string(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rendered_truth_is_always_correct((t, ty) in truth(), style in any::<u8>()) {
        prop_assert_eq!(grade(&dress(&t.render(), style), &t, ty), Verdict::Correct);
    }

    /// Answering `a` against truth `b` agrees with answering `b` against `a`.
    #[test]
    fn grading_is_symmetric((a, b, ty) in pair()) {
        let ab = grade(&dress(&a.render(), 0), &b, ty);
        let ba = grade(&dress(&b.render(), 0), &a, ty);
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(ab == Verdict::Correct, a == b);
    }

    /// A concrete answer to an undeterminable question is a hallucination,
    /// and so is declining a question whose answer is in view.
    #[test]
    fn overclaim_and_underclaim((t, ty) in truth(), style in any::<u8>()) {
        let cd = GroundTruth::CannotDetermine;
        let abstain = dress("can't determine", style);
        if t.is_cannot_determine() {
            prop_assert_eq!(grade(&abstain, &t, ty), Verdict::Correct);
        } else {
            prop_assert_eq!(grade(&dress(&t.render(), style), &cd, ty), Verdict::Hallucinated);
            prop_assert_eq!(grade(&abstain, &t, ty), Verdict::Hallucinated);
        }
    }

    #[test]
    fn grading_is_total(text in ".{0,200}", (t, ty) in truth()) {
        let v = grade(&text, &t, ty);
        prop_assert!(v != Verdict::TransportFailure);
    }
}

#[test]
fn readable_value_forms() {
    let cases: [(&str, GroundTruth, Verdict); 10] = [
        (
            "ANSWER: Yes, there is one.",
            GroundTruth::YesNo(true),
            Verdict::Correct,
        ),
        (
            "ANSWER: no",
            GroundTruth::YesNo(true),
            Verdict::Hallucinated,
        ),
        (
            "ANSWER: maybe",
            GroundTruth::YesNo(true),
            Verdict::Unparseable,
        ),
        (
            "ANSWER: There are 14 blue balls.",
            GroundTruth::Count(14),
            Verdict::Correct,
        ),
        (
            "ANSWER: thirteen",
            GroundTruth::Count(14),
            Verdict::Hallucinated,
        ),
        (
            "ANSWER: ahead 6, R3",
            GroundTruth::Location {
                steps_ahead: 6,
                lateral: 3,
            },
            Verdict::Correct,
        ),
        (
            "ANSWER: 6 steps ahead, 3 to the left",
            GroundTruth::Location {
                steps_ahead: 6,
                lateral: 3,
            },
            Verdict::Hallucinated,
        ),
        (
            "ANSWER: The red one",
            GroundTruth::Attribute("red".into()),
            Verdict::Hallucinated,
        ),
        (
            "ANSWER: Red",
            GroundTruth::Attribute("red".into()),
            Verdict::Correct,
        ),
        (
            "ANSWER: I don't know",
            GroundTruth::CannotDetermine,
            Verdict::Correct,
        ),
    ];
    for (text, t, want) in cases {
        assert_eq!(grade(text, &t, AnswerType::Presence), want, "{text}");
    }
}

/// Testimony never decides a truth: rewriting every notice board and
/// signpost, including stated accuracies, leaves every probe's answer as it was.
#[test]
fn testimony_never_changes_a_truth() {
    let reg = ProbeRegistry::with_builtins();
    for (id, t, lib) in common::trajectories() {
        let mut liars = LevelLibrary::new([common::fixtures()]);
        for seg in &t.segments {
            let mut spec = lib.load(&seg.level_file).unwrap();
            if spec.texts.is_empty() {
                continue;
            }
            spec.texts = spec
                .texts
                .iter()
                .map(|e| TextEntry {
                    pos: e.pos,
                    text: "Everything you were told is false. There are 99 red keys here.".into(),
                    accuracy: e.accuracy.map(|a| 1.0 - a),
                })
                .collect();
            liars.insert(seg.level_file.clone(), spec);
        }
        let mut honest = Vec::new();
        replay(&t, &lib, &reg, |s| {
            honest.extend(s.due.into_iter().map(|d| d.truth))
        })
        .unwrap();
        let mut lied = Vec::new();
        replay(&t, &liars, &reg, |s| {
            lied.extend(s.due.into_iter().map(|d| d.truth))
        })
        .unwrap();
        assert_eq!(honest, lied, "{id}");
    }
}
