//! Reaction networks: the DSL parser, validation, the stoichiometric matrix,
//! and subsystem enumeration.
//!
//! DSL, one reaction per line:
//!
//! ```text
//! 2 X1 <-> X2 + X3          # coefficients default to 1, '#' starts a comment
//! 3/2 A + B <-> C | fast    # rational coefficients, optional label
//! ```
//!
//! Species are ordered by first appearance; reactions by line order. All
//! coefficients are exact rationals.

use crate::error::CrnError;
use crate::exact::RatMat;
use crate::rational::{parse_rat, rat_to_string, Rat};
use crate::Result;
use num_traits::Zero;
use std::collections::HashMap;
use std::fmt::Write as _;

/// A named species with its dense index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// One reversible reaction, stored as dense per-species coefficient vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    /// Reactant coefficients, indexed by species.
    pub alpha: Vec<Rat>,
    /// Product coefficients, indexed by species.
    pub beta: Vec<Rat>,
    pub label: Option<String>,
}

impl Reaction {
    /// Net change per species: alpha - beta.
    pub fn net_column(&self) -> Vec<Rat> {
        self.alpha.iter().zip(&self.beta).map(|(a, b)| a - b).collect()
    }
}

/// A validated reaction network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
}

/// The |S| x |R| net stoichiometric matrix together with its index maps.
#[derive(Debug, Clone)]
pub struct StoichMatrix {
    pub entries: RatMat,
    pub species_names: Vec<String>,
    pub reaction_labels: Vec<String>,
}

impl Network {
    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    /// Label for reaction r: the explicit label or "r<index+1>".
    pub fn reaction_label(&self, r: usize) -> String {
        self.reactions[r].label.clone().unwrap_or_else(|| format!("r{}", r + 1))
    }

    /// The network restricted to a subset of reactions; species are kept.
    pub fn restrict_to(&self, reaction_indices: &[usize]) -> Network {
        Network {
            species: self.species.clone(),
            reactions: reaction_indices.iter().map(|&r| self.reactions[r].clone()).collect(),
        }
    }

    /// Serializes back to DSL text; `parse_network` of the output reproduces
    /// the network exactly.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for rx in &self.reactions {
            let side = |coeffs: &[Rat]| -> String {
                let mut terms = Vec::new();
                for (s, c) in coeffs.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    if c == &Rat::from_integer(1.into()) {
                        terms.push(self.species[s].name.clone());
                    } else {
                        terms.push(format!("{} {}", rat_to_string(c), self.species[s].name));
                    }
                }
                terms.join(" + ")
            };
            let _ = write!(out, "{} <-> {}", side(&rx.alpha), side(&rx.beta));
            if let Some(label) = &rx.label {
                let _ = write!(out, " | {label}");
            }
            out.push('\n');
        }
        out
    }

    /// JSON export with exact coefficients rendered as strings.
    pub fn to_json(&self) -> serde_json::Value {
        let side = |coeffs: &[Rat]| {
            let mut map = serde_json::Map::new();
            for (s, c) in coeffs.iter().enumerate() {
                if !c.is_zero() {
                    map.insert(self.species[s].name.clone(), rat_to_string(c).into());
                }
            }
            serde_json::Value::Object(map)
        };
        serde_json::json!({
            "species": self.species.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
            "reactions": self.reactions.iter().map(|rx| {
                let mut obj = serde_json::Map::new();
                obj.insert("alpha".into(), side(&rx.alpha));
                obj.insert("beta".into(), side(&rx.beta));
                if let Some(label) = &rx.label {
                    obj.insert("label".into(), label.clone().into());
                }
                serde_json::Value::Object(obj)
            }).collect::<Vec<_>>(),
        })
    }
}

/// Builds the net stoichiometric matrix (columns alpha_r - beta_r).
pub fn stoichiometric_matrix(net: &Network) -> StoichMatrix {
    let mut entries = RatMat::zeros(net.num_species(), net.num_reactions());
    for (r, rx) in net.reactions.iter().enumerate() {
        for (s, v) in rx.net_column().into_iter().enumerate() {
            entries[(s, r)] = v;
        }
    }
    StoichMatrix {
        entries,
        species_names: net.species_names(),
        reaction_labels: (0..net.num_reactions()).map(|r| net.reaction_label(r)).collect(),
    }
}

/// All 2^|R| - 1 nonempty reaction subsets as networks over the full species
/// list, ordered by subset bitmask.
pub fn subsystems(net: &Network) -> impl Iterator<Item = Network> + '_ {
    let nr = net.num_reactions();
    assert!(nr < usize::BITS as usize, "too many reactions for subset sweep");
    (1usize..(1 << nr)).map(move |mask| {
        let idx: Vec<usize> = (0..nr).filter(|r| mask & (1 << r) != 0).collect();
        net.restrict_to(&idx)
    })
}

/// Parses the reaction DSL. See the module docs for the grammar.
pub fn parse_network(text: &str) -> Result<Network> {
    let mut species: Vec<Species> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    // first pass: sparse sides per line
    struct RawReaction {
        line: usize,
        alpha: Vec<(usize, Rat)>,
        beta: Vec<(usize, Rat)>,
        label: Option<String>,
    }
    let mut raw = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let err = |message: String| CrnError::Parse { line: line_number, message };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (body, label) = match content.split_once('|') {
            Some((b, l)) => {
                let l = l.trim();
                if l.is_empty() {
                    return Err(err("empty label after '|'".into()));
                }
                (b.trim(), Some(l.to_string()))
            }
            None => (content, None),
        };
        let Some((lhs, rhs)) = body.split_once("<->") else {
            return Err(err("expected '<->' between the two sides".into()));
        };

        let mut parse_side = |side: &str| -> Result<Vec<(usize, Rat)>> {
            let side = side.trim();
            let mut terms: Vec<(usize, Rat)> = Vec::new();
            if side.is_empty() {
                return Ok(terms);
            }
            for term in side.split('+') {
                let term = term.trim();
                if term.is_empty() {
                    return Err(CrnError::Parse {
                        line: line_number,
                        message: "empty term between '+' separators".into(),
                    });
                }
                // split into optional coefficient and species name
                let mut parts = term.split_whitespace().collect::<Vec<_>>();
                let (coef, name) = if parts.len() == 1 {
                    // either "X1" or "2X1"
                    let tok = parts.pop().unwrap();
                    let split_at = tok
                        .char_indices()
                        .find(|(_, c)| c.is_ascii_alphabetic() || *c == '_')
                        .map(|(i, _)| i)
                        .unwrap_or(tok.len());
                    let (num, name) = tok.split_at(split_at);
                    if name.is_empty() {
                        return Err(CrnError::Parse {
                            line: line_number,
                            message: format!("missing species name in term '{term}'"),
                        });
                    }
                    if num.is_empty() {
                        (Rat::from_integer(1.into()), name.to_string())
                    } else {
                        let c = parse_rat(num).ok_or_else(|| CrnError::Parse {
                            line: line_number,
                            message: format!("invalid coefficient '{num}'"),
                        })?;
                        (c, name.to_string())
                    }
                } else if parts.len() == 2 {
                    let c = parse_rat(parts[0]).ok_or_else(|| CrnError::Parse {
                        line: line_number,
                        message: format!("invalid coefficient '{}'", parts[0]),
                    })?;
                    (c, parts[1].to_string())
                } else {
                    return Err(CrnError::Parse {
                        line: line_number,
                        message: format!("cannot parse term '{term}'"),
                    });
                };
                if !name.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
                    || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    return Err(CrnError::Parse {
                        line: line_number,
                        message: format!("invalid species name '{name}'"),
                    });
                }
                if coef < Rat::zero() {
                    return Err(CrnError::Parse {
                        line: line_number,
                        message: format!("negative coefficient for '{name}'"),
                    });
                }
                let idx = *index_of.entry(name.clone()).or_insert_with(|| {
                    species.push(Species { name: name.clone(), index: species.len() });
                    species.len() - 1
                });
                // duplicate species within one side merge by summing
                match terms.iter_mut().find(|(s, _)| *s == idx) {
                    Some((_, c)) => *c += coef,
                    None => terms.push((idx, coef)),
                }
            }
            Ok(terms)
        };

        let alpha = parse_side(lhs)?;
        let beta = parse_side(rhs)?;
        if alpha.is_empty() && beta.is_empty() {
            return Err(err("both sides of the reaction are empty".into()));
        }
        raw.push(RawReaction { line: line_number, alpha, beta, label });
    }

    if raw.is_empty() {
        return Err(CrnError::InvalidNetwork("no reactions found".into()));
    }
    let n = species.len();
    let mut reactions = Vec::with_capacity(raw.len());
    for rr in raw {
        let mut alpha = vec![Rat::zero(); n];
        let mut beta = vec![Rat::zero(); n];
        for (s, c) in rr.alpha {
            alpha[s] = c;
        }
        for (s, c) in rr.beta {
            beta[s] = c;
        }
        if alpha == beta {
            return Err(CrnError::Parse {
                line: rr.line,
                message: "reactant and product sides are identical (zero net change)".into(),
            });
        }
        reactions.push(Reaction { alpha, beta, label: rr.label });
    }
    Ok(Network { species, reactions })
}
