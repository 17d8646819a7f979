//! Instrument and feature definitions, including the two built-in final
//! instruments and their pre-reduction drafts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstrumentKind {
    Numerical,
    Categorical,
}

impl InstrumentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstrumentKind::Numerical => "numerical",
            InstrumentKind::Categorical => "categorical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    /// 1-based position in the instrument.
    pub index: usize,
    pub text: String,
    pub subscale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subscale {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlossaryEntry {
    pub term: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentDefinition {
    /// Name used in the `instrument` column of response files.
    pub name: String,
    pub kind: InstrumentKind,
    pub items: Vec<Item>,
    pub subscales: Vec<Subscale>,
    #[serde(default = "default_min")]
    pub likert_min: u8,
    #[serde(default = "default_max")]
    pub likert_max: u8,
    /// Value respondents are instructed to pick on the attention item.
    #[serde(default = "default_attention")]
    pub attention_instruction: u8,
    #[serde(default)]
    pub glossary: Vec<GlossaryEntry>,
    /// Final instruments require every subscale to carry at least 3 items.
    #[serde(default)]
    pub is_final: bool,
}

fn default_min() -> u8 {
    1
}
fn default_max() -> u8 {
    5
}
fn default_attention() -> u8 {
    3
}

impl InstrumentDefinition {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Column label of an item, `i1`..`iN`.
    pub fn item_label(&self, position: usize) -> String {
        format!("i{}", self.items[position].index)
    }

    pub fn item_labels(&self) -> Vec<String> {
        (0..self.items.len()).map(|i| self.item_label(i)).collect()
    }

    /// Item positions (0-based) belonging to a subscale, in instrument order.
    pub fn subscale_positions(&self, subscale: &str) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.subscale == subscale)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (pos, item) in self.items.iter().enumerate() {
            if item.index != pos + 1 {
                return Err(Error::InvalidInput(format!(
                    "{}: item indices must be contiguous from 1 (found {} at position {})",
                    self.name,
                    item.index,
                    pos + 1
                )));
            }
            if !self.subscales.iter().any(|s| s.id == item.subscale) {
                return Err(Error::InvalidInput(format!(
                    "{}: item {} references unknown subscale `{}`",
                    self.name, item.index, item.subscale
                )));
            }
        }
        if self.is_final {
            for s in &self.subscales {
                let n = self.subscale_positions(&s.id).len();
                if n < 3 {
                    return Err(Error::InvalidInput(format!(
                        "{}: subscale `{}` has {} items, final instruments need at least 3",
                        self.name, s.id, n
                    )));
                }
            }
        }
        if !(self.likert_min < self.attention_instruction
            && self.attention_instruction < self.likert_max)
        {
            return Err(Error::InvalidInput(format!(
                "{}: attention value {} must lie strictly inside [{}, {}]",
                self.name, self.attention_instruction, self.likert_min, self.likert_max
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let def: InstrumentDefinition = serde_json::from_str(text)?;
        def.validate()?;
        Ok(def)
    }

    pub fn numerical() -> Self {
        final_instrument(
            "fus-numerical",
            InstrumentKind::Numerical,
            &[
                (UM, "I can understand the scale (units) of the feature."),
                (
                    UM,
                    "I can easily understand if a given value of the feature is high or low.",
                ),
                (UM, "I know what this feature measures."),
                (UM, "I know what this feature represents."),
                (
                    UM,
                    "I think that I can easily access a definition of the feature.",
                ),
                (
                    FOR,
                    "In my opinion, the feature should be used to predict the outcome.",
                ),
                (
                    FOR,
                    "I think that the feature is important for the outcome.",
                ),
                (
                    FOR,
                    "I think it is fair that the feature influences the outcome.",
                ),
            ],
        )
    }

    pub fn categorical() -> Self {
        final_instrument(
            "fus-categorical",
            InstrumentKind::Categorical,
            &[
                (
                    UM,
                    "I can easily understand how the categories were assessed.",
                ),
                (UM, "I can easily understand the order of categories."),
                (
                    UM,
                    "I think it is feasible for me to verify the specific category of the feature.",
                ),
                (
                    UM,
                    "I understand all possible values of the categorical feature.",
                ),
                (UM, "I know what this feature represents."),
                (UM, "I require no support to understand the feature."),
                (
                    FOR,
                    "In my opinion, the feature should be used to predict the outcome.",
                ),
                (
                    FOR,
                    "I think that the feature is important for the outcome.",
                ),
                (
                    FOR,
                    "I think it is fair that the feature influences the outcome.",
                ),
            ],
        )
    }

    /// 22-item numerical draft administered before item reduction. Item texts
    /// are not machine-readable; items are labelled X0..X21.
    pub fn numerical_draft() -> Self {
        draft_instrument("fus-numerical-draft", InstrumentKind::Numerical, 22)
    }

    /// 20-item categorical draft administered before item reduction.
    pub fn categorical_draft() -> Self {
        draft_instrument("fus-categorical-draft", InstrumentKind::Categorical, 20)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "fus-numerical" => Some(Self::numerical()),
            "fus-categorical" => Some(Self::categorical()),
            "fus-numerical-draft" => Some(Self::numerical_draft()),
            "fus-categorical-draft" => Some(Self::categorical_draft()),
            _ => None,
        }
    }

    pub fn builtins() -> Vec<Self> {
        vec![
            Self::numerical(),
            Self::categorical(),
            Self::numerical_draft(),
            Self::categorical_draft(),
        ]
    }
}

const UM: &str = "MnU";
const FOR: &str = "Otp";

fn subscales() -> Vec<Subscale> {
    vec![
        Subscale {
            id: UM.into(),
            name: "Understanding & Measurement".into(),
        },
        Subscale {
            id: FOR.into(),
            name: "Feature-Outcome Relation".into(),
        },
    ]
}

fn final_instrument(
    name: &str,
    kind: InstrumentKind,
    items: &[(&str, &str)],
) -> InstrumentDefinition {
    InstrumentDefinition {
        name: name.into(),
        kind,
        items: items
            .iter()
            .enumerate()
            .map(|(i, (sub, text))| Item {
                index: i + 1,
                text: (*text).into(),
                subscale: (*sub).into(),
            })
            .collect(),
        subscales: subscales(),
        likert_min: 1,
        likert_max: 5,
        attention_instruction: 3,
        glossary: glossary(),
        is_final: true,
    }
}

fn draft_instrument(name: &str, kind: InstrumentKind, p: usize) -> InstrumentDefinition {
    InstrumentDefinition {
        name: name.into(),
        kind,
        items: (0..p)
            .map(|i| Item {
                index: i + 1,
                text: format!("Draft item X{i}"),
                subscale: "draft".into(),
            })
            .collect(),
        subscales: vec![Subscale {
            id: "draft".into(),
            name: "Unreduced draft".into(),
        }],
        likert_min: 1,
        likert_max: 5,
        attention_instruction: 3,
        glossary: glossary(),
        is_final: false,
    }
}

/// Definitions shown to respondents before rating.
pub fn glossary() -> Vec<GlossaryEntry> {
    [
        ("Feature", "A column in a dataset; e.g. `Debt' to predict Mortgage"),
        ("Value", "a value that a feature can take; e.g. -€500 as a value of `debt'"),
        ("Categorical feature", "a feature with distinct categories; e.g. phone brands"),
        (
            "Measuring Scale",
            "a method used to assess a numerical feature; e.g. Celsius is a measuring scale for temperature",
        ),
        (
            "End Points",
            "The minimum and maximum values a numerical feature can reasonably take; e.g. the age range of loan applicants may be expected to vary between 18 and 100 years.",
        ),
    ]
    .iter()
    .map(|(t, d)| GlossaryEntry {
        term: (*t).into(),
        definition: (*d).into(),
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Hiring,
    Medicine,
    Loan,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub id: String,
    pub domain: Domain,
    pub name: String,
    pub intended_meaning: String,
    pub kind: InstrumentKind,
}

impl FeatureDescriptor {
    /// Name of the built-in final instrument that rates this feature.
    pub fn instrument_name(&self) -> &'static str {
        match self.kind {
            InstrumentKind::Numerical => "fus-numerical",
            InstrumentKind::Categorical => "fus-categorical",
        }
    }
}

/// The nine features rated during scale testing.
pub fn reference_features() -> Vec<FeatureDescriptor> {
    use Domain::*;
    use InstrumentKind::*;
    [
        (
            "recruitment_strategy",
            Hiring,
            "Recruitment Strategy",
            "Strategy adopted by the hiring team for recruitment",
            Categorical,
        ),
        (
            "personality_score",
            Hiring,
            "Personality Score",
            "Score of candidate's personality traits",
            Numerical,
        ),
        (
            "degree",
            Hiring,
            "Degree",
            "Highest educational degree held",
            Categorical,
        ),
        ("bmi", Medicine, "BMI", "Body Mass Index", Numerical),
        (
            "total_cholesterol",
            Medicine,
            "Total Cholesterol",
            "Cholesterol in mg/dL or mmol/L",
            Numerical,
        ),
        (
            "neoplasm_stage",
            Medicine,
            "Neoplasm Stage",
            "Whether the tumour is regional or has spread",
            Categorical,
        ),
        (
            "credit_score",
            Loan,
            "Credit Score",
            "Applicant's credit score",
            Numerical,
        ),
        (
            "debt",
            Loan,
            "Debt",
            "Total amount of individual's debt",
            Numerical,
        ),
        (
            "loan_type",
            Loan,
            "Business or commercial",
            "Type of loan applied for",
            Categorical,
        ),
    ]
    .iter()
    .map(|&(id, domain, name, meaning, kind)| FeatureDescriptor {
        id: id.into(),
        domain,
        name: name.into(),
        intended_meaning: meaning.into(),
        kind,
    })
    .collect()
}
