//! The fourteen reduction steps: their family shapes and `(A, B)` constants.

use serde::{Deserialize, Serialize};

use super::family::{Target, XKind, YKind};
use super::{Coef, LogBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StepId {
    S4_1,
    S4_2,
    S4_3,
    S4_4,
    S4_5,
    S4_6,
    S4_7,
    S4_8,
    S4_9,
    S4_10,
    S4_11,
    S4_12,
    S4_13,
    S4_14,
}

pub const STEP_IDS: [StepId; 14] = [
    StepId::S4_1,
    StepId::S4_2,
    StepId::S4_3,
    StepId::S4_4,
    StepId::S4_5,
    StepId::S4_6,
    StepId::S4_7,
    StepId::S4_8,
    StepId::S4_9,
    StepId::S4_10,
    StepId::S4_11,
    StepId::S4_12,
    StepId::S4_13,
    StepId::S4_14,
];

/// Which exponential base a target uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    B,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTarget {
    pub variable: String,
    pub a: String,
    /// `A` is multiplied by `b`.
    pub scaled: bool,
    pub log_base: BaseKind,
    /// Added to `w_max`.
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepInfo {
    pub id: StepId,
    pub name: String,
    pub x: XKind,
    pub y: YKind,
    pub targets: Vec<StepTarget>,
}

fn t(variable: &str, a: &str, scaled: bool, log_base: BaseKind, offset: i64) -> StepTarget {
    StepTarget { variable: variable.into(), a: a.into(), scaled, log_base, offset }
}

impl StepId {
    pub fn name(self) -> &'static str {
        match self {
            StepId::S4_1 => "4.1",
            StepId::S4_2 => "4.2",
            StepId::S4_3 => "4.3",
            StepId::S4_4 => "4.4",
            StepId::S4_5 => "4.5",
            StepId::S4_6 => "4.6",
            StepId::S4_7 => "4.7",
            StepId::S4_8 => "4.8",
            StepId::S4_9 => "4.9",
            StepId::S4_10 => "4.10",
            StepId::S4_11 => "4.11",
            StepId::S4_12 => "4.12",
            StepId::S4_13 => "4.13",
            StepId::S4_14 => "4.14",
        }
    }

    pub fn parse(s: &str) -> Option<StepId> {
        STEP_IDS.iter().copied().find(|id| id.name() == s)
    }

    pub fn shape(self) -> (XKind, YKind) {
        use XKind::*;
        use YKind::*;
        match self {
            StepId::S4_1 => (X1, Y0),
            StepId::S4_2 => (X1, Y1),
            StepId::S4_3 => (X1, Y2),
            StepId::S4_4 => (X2, Y2),
            StepId::S4_5 => (X2, Y1),
            StepId::S4_6 => (X2, Y2),
            StepId::S4_7 => (X3, Y1),
            StepId::S4_8 => (X2, Y0),
            StepId::S4_9 => (X3, Y0),
            StepId::S4_10 => (X3, Y1),
            StepId::S4_11 => (X2, Y1),
            StepId::S4_12 => (X2, Y2),
            StepId::S4_13 => (X3, Y1),
            StepId::S4_14 => (X3, Y2),
        }
    }

    pub fn info(self) -> StepInfo {
        use BaseKind::*;
        let targets = match self {
            StepId::S4_1 => vec![t("l1", "32.63", false, B, 1), t("n1-n2", "32.63", true, Alpha, 0)],
            StepId::S4_2 => vec![t("l1", "41.28", false, B, 1), t("n1-n3", "41.28", true, Alpha, 0)],
            StepId::S4_3 => vec![t("l1", "7.49", false, B, 1)],
            StepId::S4_4 => vec![t("l2", "13.1", false, B, 1)],
            StepId::S4_5 | StepId::S4_11 => {
                vec![t("l2", "18.38", false, B, 1), t("n1-n3", "18.38", false, Alpha, 0)]
            }
            StepId::S4_6 | StepId::S4_12 => vec![t("l2", "6.65", false, B, 1)],
            StepId::S4_7 | StepId::S4_10 | StepId::S4_13 => vec![t("n1-n3", "5.82", false, Alpha, 0)],
            StepId::S4_8 => vec![t("l2", "23.7", false, B, 1), t("n1-n2", "23.7", false, Alpha, 0)],
            StepId::S4_9 => vec![t("n1-n2", "11.52", false, Alpha, 0)],
            StepId::S4_14 => vec![t("n1", "9.31", false, Alpha, 0)],
        };
        let (x, y) = self.shape();
        StepInfo { id: self, name: self.name().into(), x, y, targets }
    }

    /// Targets with `A` and `B` instantiated for base `b`.
    pub fn targets(self, b: u32) -> Vec<Target> {
        self.info()
            .targets
            .into_iter()
            .map(|st| {
                let a = Coef::parse(&st.a).expect("constant");
                Target {
                    variable: st.variable,
                    a: if st.scaled { a.times(b) } else { a },
                    base: match st.log_base {
                        BaseKind::B => LogBase::Int(b),
                        BaseKind::Alpha => LogBase::Golden,
                    },
                    offset: st.offset,
                }
            })
            .collect()
    }
}

pub fn step_table() -> Vec<StepInfo> {
    STEP_IDS.iter().map(|s| s.info()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_matches_code() {
        let text = include_str!("../../data/steps.json");
        let stored: Vec<StepInfo> = serde_json::from_str(text).unwrap();
        assert_eq!(stored, step_table());
    }

    #[test]
    fn names_round_trip() {
        for s in STEP_IDS {
            assert_eq!(StepId::parse(s.name()), Some(s));
        }
        assert_eq!(StepId::parse("4.15"), None);
    }

    #[test]
    fn scaled_constant() {
        let t = StepId::S4_1.targets(8);
        assert_eq!(t[1].a.text, "32.63*8");
        assert_eq!(t[1].base, LogBase::Golden);
        assert_eq!(t[0].base, LogBase::Int(8));
    }
}
