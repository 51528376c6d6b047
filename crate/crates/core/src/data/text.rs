//! Utterance preprocessing: lowercasing, punctuation removal, and
//! digit-to-word conversion.
//!
//! The pipeline, applied per whitespace-delimited piece of the input:
//!
//! 1. lowercase (optional, on by default),
//! 2. replace every ASCII punctuation character with a space,
//! 3. replace every maximal run of ASCII digits with English cardinal
//!    words ("50" -> "fifty"), space-separated so step 2 can never mangle
//!    them ("fifty five", not "fifty-five"),
//! 4. split on whitespace.
//!
//! Runs of up to six digits are read as one number (0 through 999999);
//! longer runs are spelled digit by digit. An input with no surviving
//! tokens (empty or all punctuation) yields the single UNK sentinel, so
//! the result is always non-empty. The reserved sentinels `<pad>` and
//! `<unk>` pass through verbatim, which keeps preprocessing idempotent
//! on its own output.

use crate::data::vocab::{PAD_TOKEN, UNK_TOKEN};

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen",
];

const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

/// English cardinal words for 0..=999999, space-separated, no "and".
/// Values outside the range panic; callers gate on run length.
pub fn number_to_words(n: u64) -> String {
    assert!(n <= 999_999, "number_to_words covers 0..=999999");
    if n == 0 {
        return ONES[0].to_string();
    }
    let mut words: Vec<&'static str> = Vec::new();
    let thousands = (n / 1000) as usize;
    let rest = (n % 1000) as usize;
    if thousands > 0 {
        push_below_thousand(thousands, &mut words);
        words.push("thousand");
    }
    if rest > 0 {
        push_below_thousand(rest, &mut words);
    }
    words.join(" ")
}

fn push_below_thousand(mut n: usize, words: &mut Vec<&'static str>) {
    debug_assert!((1..=999).contains(&n));
    if n >= 100 {
        words.push(ONES[n / 100]);
        words.push("hundred");
        n %= 100;
    }
    if n >= 20 {
        words.push(TENS[n / 10]);
        n %= 10;
    }
    if n > 0 {
        words.push(ONES[n]);
    }
}

/// Preprocesses with the default lowercasing behavior.
pub fn preprocess(text: &str) -> Vec<String> {
    preprocess_with(text, true)
}

/// Full preprocessing pipeline; see the module docs.
pub fn preprocess_with(text: &str, lowercase: bool) -> Vec<String> {
    let mut tokens: Vec<String> = Vec::new();
    for raw in text.split_whitespace() {
        let piece = if lowercase {
            raw.to_lowercase()
        } else {
            raw.to_string()
        };
        if piece == PAD_TOKEN || piece == UNK_TOKEN {
            tokens.push(piece);
            continue;
        }
        let mut cleaned = String::with_capacity(piece.len());
        for c in piece.chars() {
            cleaned.push(if c.is_ascii_punctuation() { ' ' } else { c });
        }
        let expanded = expand_digit_runs(&cleaned);
        tokens.extend(expanded.split_whitespace().map(str::to_string));
    }
    if tokens.is_empty() {
        tokens.push(UNK_TOKEN.to_string());
    }
    tokens
}

fn expand_digit_runs(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut run = String::new();
    for c in s.chars() {
        if c.is_ascii_digit() {
            run.push(c);
        } else {
            flush_run(&mut out, &mut run);
            out.push(c);
        }
    }
    flush_run(&mut out, &mut run);
    out
}

fn flush_run(out: &mut String, run: &mut String) {
    if run.is_empty() {
        return;
    }
    out.push(' ');
    if run.len() <= 6 {
        let n: u64 = run.parse().expect("six ASCII digits fit in u64");
        out.push_str(&number_to_words(n));
    } else {
        // Longer runs (phone numbers, ids) are spelled digit by digit.
        for (i, c) in run.chars().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(ONES[c.to_digit(10).expect("ascii digit") as usize]);
        }
    }
    out.push(' ');
    run.clear();
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_punctuation_and_lowercases() {
        assert_eq!(
            preprocess("Switch off the garage lights."),
            ["switch", "off", "the", "garage", "lights"]
        );
    }

    #[test]
    fn degenerate_inputs_yield_the_unk_sentinel() {
        assert_eq!(preprocess(""), [UNK_TOKEN]);
        assert_eq!(preprocess("!!!"), [UNK_TOKEN]);
        assert_eq!(preprocess("   .,;   "), [UNK_TOKEN]);
    }

    #[test]
    fn converts_numbers_to_words() {
        assert_eq!(
            preprocess("set brightness to 50"),
            ["set", "brightness", "to", "fifty"]
        );
        assert_eq!(preprocess("wake me at 7"), ["wake", "me", "at", "seven"]);
        assert_eq!(preprocess("room 101"), ["room", "one", "hundred", "one"]);
    }

    #[test]
    fn digit_runs_inside_tokens_split_cleanly() {
        assert_eq!(preprocess("5pm"), ["five", "pm"]);
        assert_eq!(preprocess("pm5"), ["pm", "five"]);
        assert_eq!(preprocess("3.5"), ["three", "five"]);
    }

    #[test]
    fn long_runs_are_spelled_digit_by_digit() {
        assert_eq!(
            preprocess("1234567"),
            ["one", "two", "three", "four", "five", "six", "seven"]
        );
        assert_eq!(
            preprocess("0001000"),
            ["zero", "zero", "zero", "one", "zero", "zero", "zero"]
        );
    }

    #[test]
    fn sentinels_pass_through_verbatim() {
        assert_eq!(preprocess(UNK_TOKEN), [UNK_TOKEN]);
        assert_eq!(preprocess(PAD_TOKEN), [PAD_TOKEN]);
        assert_eq!(preprocess("<UNK>"), [UNK_TOKEN]);
    }

    #[test]
    fn lowercasing_can_be_disabled() {
        assert_eq!(preprocess_with("Hello World", false), ["Hello", "World"]);
    }

    #[test]
    fn number_words_spot_values() {
        assert_eq!(number_to_words(0), "zero");
        assert_eq!(number_to_words(7), "seven");
        assert_eq!(number_to_words(13), "thirteen");
        assert_eq!(number_to_words(21), "twenty one");
        assert_eq!(number_to_words(50), "fifty");
        assert_eq!(number_to_words(100), "one hundred");
        assert_eq!(number_to_words(105), "one hundred five");
        assert_eq!(number_to_words(342), "three hundred forty two");
        assert_eq!(number_to_words(1000), "one thousand");
        assert_eq!(number_to_words(52014), "fifty two thousand fourteen");
        assert_eq!(
            number_to_words(999_999),
            "nine hundred ninety nine thousand nine hundred ninety nine"
        );
    }

    /// Cross-checks 0..=1000 against a committed list generated by an
    /// independent converter (see tests/data/number_words_0_1000.txt).
    #[test]
    fn number_words_match_committed_reference_list() {
        let fixture = include_str!("../../tests/data/number_words_0_1000.txt");
        let mut checked = 0;
        for line in fixture.lines() {
            let (n, words) = line.split_once('\t').expect("fixture line is n<TAB>words");
            let n: u64 = n.parse().expect("fixture number parses");
            assert_eq!(number_to_words(n), words, "mismatch at {n}");
            checked += 1;
        }
        assert_eq!(checked, 1001);
    }

    #[test]
    fn idempotent_on_examples() {
        for s in [
            "Switch off the garage lights.",
            "set brightness to 50",
            "what's the WEATHER like, today?!",
            "",
            "room 101 at 7",
        ] {
            let once = preprocess(s);
            let twice = preprocess(&once.join(" "));
            assert_eq!(once, twice);
        }
    }

    proptest! {
        /// preprocess(join(preprocess(s))) = preprocess(s) for printable
        /// ASCII inputs.
        #[test]
        fn idempotence(s in "[ -~]{0,60}") {
            let once = preprocess(&s);
            let twice = preprocess(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        /// The output never contains digits, ASCII punctuation (other than
        /// the sentinels), or uppercase letters.
        #[test]
        fn output_alphabet_is_clean(s in "[ -~]{0,60}") {
            for t in preprocess(&s) {
                if t == UNK_TOKEN || t == PAD_TOKEN {
                    continue;
                }
                prop_assert!(!t.chars().any(|c| c.is_ascii_digit()
                    || c.is_ascii_punctuation()
                    || c.is_ascii_uppercase()), "dirty token {t:?}");
            }
        }
    }
}
