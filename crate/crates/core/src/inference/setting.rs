use std::fmt;

use crate::cola::Constitution;
use crate::error::{Error, Result};

/// One chosen option per parameter group, in group declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MissionSetting {
    choices: Vec<String>,
}

impl MissionSetting {
    /// Validates that `choices` picks exactly one option from every group.
    /// Choices may be given in any order.
    pub fn new<S: AsRef<str>>(c: &Constitution, choices: &[S]) -> Result<Self> {
        let mut ordered = Vec::with_capacity(c.parameter_groups.len());
        for g in &c.parameter_groups {
            let picked: Vec<&str> = choices
                .iter()
                .map(AsRef::as_ref)
                .filter(|o| g.options.iter().any(|x| x == o))
                .collect();
            match picked.as_slice() {
                [one] => ordered.push((*one).to_owned()),
                [] => {
                    return Err(Error::input(format!(
                        "no option chosen for parameter group {{{}}}",
                        g.options.join(", ")
                    )))
                }
                _ => {
                    return Err(Error::input(format!(
                        "several options chosen for parameter group {{{}}}",
                        g.options.join(", ")
                    )))
                }
            }
        }
        if let Some(stray) = choices
            .iter()
            .map(AsRef::as_ref)
            .find(|o| !c.is_parameter(o))
        {
            return Err(Error::input(format!("`{stray}` is not a parameter option")));
        }
        Ok(MissionSetting { choices: ordered })
    }

    /// First option of every group.
    pub fn first(c: &Constitution) -> Self {
        MissionSetting {
            choices: c
                .parameter_groups
                .iter()
                .map(|g| g.options[0].clone())
                .collect(),
        }
    }

    /// Every setting in the cartesian product, first group varying slowest,
    /// options in declaration order.
    pub fn enumerate(c: &Constitution) -> Vec<MissionSetting> {
        let mut out = vec![Vec::new()];
        for g in &c.parameter_groups {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<String>| {
                    g.options.iter().map(move |o| {
                        let mut v = prefix.clone();
                        v.push(o.clone());
                        v
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|choices| MissionSetting { choices })
            .collect()
    }

    /// Number of settings in the cartesian product.
    pub fn count(c: &Constitution) -> usize {
        c.parameter_groups.iter().map(|g| g.options.len()).product()
    }

    pub fn is_active(&self, option: &str) -> bool {
        self.choices.iter().any(|c| c == option)
    }

    pub fn choices(&self) -> &[String] {
        &self.choices
    }

    /// Same setting with group `group` switched to `option`.
    pub fn with_choice(&self, group: usize, option: &str) -> Self {
        let mut s = self.clone();
        s.choices[group] = option.to_owned();
        s
    }
}

impl fmt::Display for MissionSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.choices.is_empty() {
            f.write_str("(no parameters)")
        } else {
            f.write_str(&self.choices.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cola::parse;

    #[test]
    fn enumeration_order() {
        let c = parse("parameter {a, b}.\nparameter {x, y, z}.\nfield objective o if a.").unwrap();
        let all = MissionSetting::enumerate(&c);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].choices(), ["a", "x"]);
        assert_eq!(all[1].choices(), ["a", "y"]);
        assert_eq!(all[5].choices(), ["b", "z"]);
        assert_eq!(MissionSetting::count(&c), 6);
    }

    #[test]
    fn validation() {
        let c = parse("parameter {a, b}.\nparameter {x, y}.\nfield objective o if a.").unwrap();
        assert_eq!(
            MissionSetting::new(&c, &["y", "b"]).unwrap().choices(),
            ["b", "y"]
        );
        assert!(MissionSetting::new(&c, &["a"]).is_err());
        assert!(MissionSetting::new(&c, &["a", "b", "x"]).is_err());
        assert!(MissionSetting::new(&c, &["a", "x", "q"]).is_err());
        let none = parse("field objective o if over(p).").unwrap();
        assert_eq!(MissionSetting::enumerate(&none).len(), 1);
    }
}
