//! Combinatorial prompt augmentation.
//!
//! A prompt is assembled from seven slots around the class name:
//!
//! ```text
//! <looks>, <extent1> <typical>, <extent2> <size> <class name>, <location>. <style>.
//! ```
//!
//! Both extent slots draw from the same option list. Empty options are
//! allowed; an empty slot drops its word and any separator left dangling.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::par;
use crate::seed;

/// Attempts per record before giving up on finding an unused prompt.
pub const MAX_ATTEMPTS_PER_RECORD: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModifierLexicon {
    pub looks: Vec<String>,
    pub extent: Vec<String>,
    pub typical: Vec<String>,
    pub size: Vec<String>,
    pub location: Vec<String>,
    pub style: Vec<String>,
}

const DEFAULT_LEXICON_JSON: &str = include_str!("../data/default_lexicon.json");

impl Default for ModifierLexicon {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_LEXICON_JSON).expect("bundled lexicon parses")
    }
}

impl ModifierLexicon {
    /// Checks that every list is non-empty, options are distinct, trimmed,
    /// and free of the `,` and `.` separators.
    pub fn validate(&self) -> Result<()> {
        for (slot, options) in self.slots() {
            if options.is_empty() {
                return Err(Error::InvalidLexicon(format!("slot `{slot}` has no options")));
            }
            let mut seen = HashSet::new();
            for o in options {
                if !seen.insert(o.as_str()) {
                    return Err(Error::InvalidLexicon(format!("slot `{slot}` repeats `{o}`")));
                }
                if o.trim() != o || o.contains("  ") {
                    return Err(Error::InvalidLexicon(format!(
                        "option `{o}` in `{slot}` has stray whitespace"
                    )));
                }
                if o.contains([',', '.']) {
                    return Err(Error::InvalidLexicon(format!(
                        "option `{o}` in `{slot}` contains a separator"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lexicon: ModifierLexicon = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidLexicon(format!("{}: {e}", path.display())))?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    fn slots(&self) -> [(&'static str, &Vec<String>); 6] {
        [
            ("looks", &self.looks),
            ("extent", &self.extent),
            ("typical", &self.typical),
            ("size", &self.size),
            ("location", &self.location),
            ("style", &self.style),
        ]
    }

    /// Number of choice tuples (the extent list counts twice).
    pub fn combinations(&self) -> u128 {
        [
            self.looks.len(),
            self.extent.len(),
            self.typical.len(),
            self.extent.len(),
            self.size.len(),
            self.location.len(),
            self.style.len(),
        ]
        .iter()
        .map(|&n| n as u128)
        .product()
    }
}

/// One option per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptChoices {
    pub looks: String,
    pub extent1: String,
    pub typical: String,
    pub extent2: String,
    pub size: String,
    pub location: String,
    pub style: String,
}

impl PromptChoices {
    pub fn new(
        looks: &str,
        extent1: &str,
        typical: &str,
        extent2: &str,
        size: &str,
        location: &str,
        style: &str,
    ) -> Self {
        PromptChoices {
            looks: looks.into(),
            extent1: extent1.into(),
            typical: typical.into(),
            extent2: extent2.into(),
            size: size.into(),
            location: location.into(),
            style: style.into(),
        }
    }
}

fn join_nonempty(parts: &[&str], sep: &str) -> String {
    parts
        .iter()
        .filter(|p| !p.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(sep)
}

/// Renders a prompt from explicit choices.
pub fn assemble(class_name: &str, c: &PromptChoices) -> String {
    let adjectives = join_nonempty(&[&c.extent1, &c.typical], " ");
    let subject = join_nonempty(&[&c.extent2, &c.size, class_name.trim()], " ");
    let mut text = join_nonempty(&[&c.looks, &adjectives, &subject, &c.location], ", ");
    text.push('.');
    if !c.style.is_empty() {
        text.push(' ');
        text.push_str(&c.style);
        text.push('.');
    }
    text
}

/// Strips `opt` plus its separator from the end of `text`. An empty option
/// matches trivially.
fn strip_option<'t>(text: &'t str, opt: &str, sep: &str) -> Option<&'t str> {
    if opt.is_empty() {
        return Some(text);
    }
    let rest = text.strip_suffix(opt)?;
    if rest.is_empty() {
        Some(rest)
    } else {
        rest.strip_suffix(sep)
    }
}

/// Strips `"<opt> "` from the end of `text`; an empty option matches
/// trivially.
fn strip_word<'t>(text: &'t str, opt: &str) -> Option<&'t str> {
    if opt.is_empty() {
        Some(text)
    } else {
        text.strip_suffix(' ')?.strip_suffix(opt)
    }
}

/// All choice tuples under `lexicon` that render to exactly `prompt`.
pub fn parse_prompt(prompt: &str, class_name: &str, lexicon: &ModifierLexicon) -> Vec<PromptChoices> {
    let class_name = class_name.trim();
    let mut found = Vec::new();
    for style in &lexicon.style {
        let Some(sentence) = (if style.is_empty() {
            prompt.strip_suffix('.')
        } else {
            prompt
                .strip_suffix(&format!(" {style}."))
                .and_then(|s| s.strip_suffix('.'))
        }) else {
            continue;
        };
        for location in &lexicon.location {
            let Some(head) = strip_option(sentence, location, ", ") else {
                continue;
            };
            // the subject group always ends with the class name
            let Some(before_class) = head.strip_suffix(class_name) else {
                continue;
            };
            for size in &lexicon.size {
                let Some(r) = strip_word(before_class, size) else {
                    continue;
                };
                for extent2 in &lexicon.extent {
                    let Some(r) = strip_word(r, extent2) else {
                        continue;
                    };
                    // what remains is "" or "<looks>, <adjectives>, "
                    let prefix = match r {
                        "" => "",
                        _ => match r.strip_suffix(", ") {
                            Some(p) if !p.is_empty() => p,
                            _ => continue,
                        },
                    };
                    for typical in &lexicon.typical {
                        for extent1 in &lexicon.extent {
                            let adjectives = join_nonempty(&[extent1, typical], " ");
                            for looks in &lexicon.looks {
                                if join_nonempty(&[looks, &adjectives], ", ") == prefix {
                                    found.push(PromptChoices::new(
                                        looks, extent1, typical, extent2, size, location, style,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    found
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub seed: u64,
    pub choices: PromptChoices,
}

fn draw(options: &[String], rng: &mut seed::Rng) -> String {
    options.choose(rng).cloned().unwrap_or_default()
}

/// Draws one option per slot from a generator seeded with `seed`.
pub fn generate_prompt(class_name: &str, lexicon: &ModifierLexicon, seed: u64) -> Prompt {
    let mut rng = seed::rng(seed, &[]);
    let choices = PromptChoices {
        looks: draw(&lexicon.looks, &mut rng),
        extent1: draw(&lexicon.extent, &mut rng),
        typical: draw(&lexicon.typical, &mut rng),
        extent2: draw(&lexicon.extent, &mut rng),
        size: draw(&lexicon.size, &mut rng),
        location: draw(&lexicon.location, &mut rng),
        style: draw(&lexicon.style, &mut rng),
    };
    Prompt {
        text: assemble(class_name, &choices),
        seed,
        choices,
    }
}

/// One line of a prompt manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub class_id: u32,
    pub class_name: String,
    pub seed: u64,
    pub prompt: String,
    pub choices: PromptChoices,
}

/// `per_class` distinct prompts for every class.
///
/// Record `i` of class `c` tries seeds derived from
/// `(master_seed, c, i, attempt)` until it finds a prompt not yet used in
/// that class.
pub fn generate_prompt_set(
    classes: &[ClassLabel],
    per_class: usize,
    lexicon: &ModifierLexicon,
    master_seed: u64,
) -> Result<Vec<PromptRecord>> {
    if per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be at least 1".into()));
    }
    lexicon.validate()?;
    let available = lexicon.combinations();
    if available < per_class as u128 {
        return Err(Error::LexiconTooSmall {
            available,
            requested: per_class,
        });
    }
    if let Some(c) = classes.iter().find(|c| c.name.trim().is_empty()) {
        return Err(Error::InvalidArgument(format!("class {} has an empty name", c.id)));
    }

    let per_class_records = par::map_slice(classes, |class| {
        let mut used = HashSet::with_capacity(per_class);
        let mut out = Vec::with_capacity(per_class);
        for i in 0..per_class {
            let record = (0..MAX_ATTEMPTS_PER_RECORD).find_map(|attempt| {
                let s = seed::derive(
                    master_seed,
                    &[u64::from(class.id), i as u64, attempt as u64],
                );
                let p = generate_prompt(&class.name, lexicon, s);
                used.insert(p.text.clone()).then(|| PromptRecord {
                    class_id: class.id,
                    class_name: class.name.clone(),
                    seed: s,
                    prompt: p.text,
                    choices: p.choices,
                })
            });
            match record {
                Some(r) => out.push(r),
                None => {
                    return Err(Error::LexiconTooSmall {
                        available,
                        requested: per_class,
                    })
                }
            }
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(classes.len() * per_class);
    for records in per_class_records {
        all.extend(records?);
    }
    Ok(all)
}
