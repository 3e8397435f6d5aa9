//! Closed-form enhancement values: braid-axis links and Hopf-plumbed
//! surfaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A word in the braid group `B_n`. Letters are signed generator indices:
/// `+i` is `s_i`, `-i` is `s_i^-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BraidWord {
    n: usize,
    letters: Vec<i64>,
}

impl BraidWord {
    pub fn new(n: usize, letters: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Syntax {
                pos: 0,
                msg: "strand count must be at least 1".into(),
            });
        }
        for &l in &letters {
            let index = l.unsigned_abs() as usize;
            if l == 0 || index >= n {
                return Err(Error::IndexOutOfRange { index, n });
            }
        }
        Ok(Self { n, letters })
    }

    pub fn strands(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> &[i64] {
        &self.letters
    }
}

/// Parses `B<n>: s1 s2^-1 s1 ...`.
pub fn parse_braid(text: &str) -> Result<BraidWord> {
    let t = text.trim_start();
    let lead = text.len() - t.len();
    let colon = t.find(':').ok_or(Error::Syntax {
        pos: lead,
        msg: "expected `B<n>:`".into(),
    })?;
    let head = t[..colon].trim();
    let n: usize = head
        .strip_prefix('B')
        .and_then(|d| d.parse().ok())
        .ok_or(Error::Syntax {
            pos: lead,
            msg: format!("malformed braid group `{head}`"),
        })?;
    let body_start = lead + colon + 1;
    let mut letters = Vec::new();
    let mut pos = body_start;
    for word in text[body_start..].split_inclusive(char::is_whitespace) {
        let tok = word.trim();
        if tok.is_empty() {
            pos += word.len();
            continue;
        }
        let tok_pos = pos + (word.len() - word.trim_start().len());
        pos += word.len();
        let bad = || Error::Syntax {
            pos: tok_pos,
            msg: format!("malformed generator `{tok}`"),
        };
        let rest = tok.strip_prefix('s').ok_or_else(bad)?;
        let (digits, sign) = match rest.strip_suffix("^-1") {
            Some(d) => (d, -1),
            None => (rest, 1),
        };
        let index: i64 = digits.parse().map_err(|_| bad())?;
        if index < 1 || index as usize >= n {
            return Err(Error::IndexOutOfRange {
                index: index.max(0) as usize,
                n,
            });
        }
        letters.push(sign * index);
    }
    BraidWord::new(n, letters)
}

impl std::fmt::Display for BraidWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "B{}:", self.n)?;
        for l in &self.letters {
            if *l > 0 {
                write!(f, " s{l}")?;
            } else {
                write!(f, " s{}^-1", -l)?;
            }
        }
        Ok(())
    }
}

pub fn exponent_sum(b: &BraidWord) -> i64 {
    b.letters.iter().map(|l| l.signum()).sum()
}

/// Bennequin number `n - e(β) + 1`, the enhancement of the fibered link made
/// from the closed braid, its axis, and an oppositely oriented parallel of
/// each component.
pub fn hirasawa_lambda(b: &BraidWord) -> i64 {
    b.n as i64 - exponent_sum(b) + 1
}

/// Number of components of the closed braid: cycles of the induced
/// permutation.
pub fn closed_braid_components(b: &BraidWord) -> usize {
    let mut perm: Vec<usize> = (0..b.n).collect();
    for l in &b.letters {
        let i = l.unsigned_abs() as usize - 1;
        perm.swap(i, i + 1);
    }
    let mut seen = vec![false; b.n];
    let mut cycles = 0;
    for start in 0..b.n {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
        }
    }
    cycles
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandSign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl BandSign {
    pub fn flip(self) -> Self {
        match self {
            BandSign::Positive => BandSign::Negative,
            BandSign::Negative => BandSign::Positive,
        }
    }
}

/// Hopf bands plumbed along a tree. JSON form:
/// `{"signs": ["+", "-"], "edges": [[0, 1]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlumbingTree {
    pub signs: Vec<BandSign>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl PlumbingTree {
    pub fn validate(&self) -> Result<()> {
        let n = self.signs.len();
        if n == 0 {
            return Err(Error::NotATree("no nodes".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(Error::NotATree(format!(
                "{} nodes need {} edges, found {}",
                n,
                n - 1,
                self.edges.len()
            )));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(parent: &mut [usize], mut k: usize) -> usize {
            while parent[k] != k {
                parent[k] = parent[parent[k]];
                k = parent[k];
            }
            k
        }
        for &[a, b] in &self.edges {
            if a >= n || b >= n {
                return Err(Error::NotATree(format!("edge [{a}, {b}] out of range")));
            }
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            if ra == rb {
                return Err(Error::NotATree(format!("edge [{a}, {b}] closes a cycle")));
            }
            parent[ra] = rb;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: PlumbingTree = serde_json::from_str(text)
            .map_err(|e| Error::Syntax {
                pos: e.column().saturating_sub(1),
                msg: e.to_string(),
            })?;
        t.validate()?;
        Ok(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PlumbingInvariants {
    pub lambda: usize,
    pub mu: usize,
}

/// λ is the number of negative bands, μ the number of bands.
pub fn plumbing_invariants(t: &PlumbingTree) -> Result<PlumbingInvariants> {
    t.validate()?;
    Ok(PlumbingInvariants {
        lambda: t.signs.iter().filter(|s| **s == BandSign::Negative).count(),
        mu: t.signs.len(),
    })
}

pub fn plumbing_mirror(t: &PlumbingTree) -> PlumbingTree {
    PlumbingTree {
        signs: t.signs.iter().map(|s| s.flip()).collect(),
        edges: t.edges.clone(),
    }
}

/// Joins two trees by an edge between `a` (in `left`) and `b` (in `right`).
pub fn plumb(left: &PlumbingTree, a: usize, right: &PlumbingTree, b: usize) -> PlumbingTree {
    let off = left.signs.len();
    let mut signs = left.signs.clone();
    signs.extend_from_slice(&right.signs);
    let mut edges = left.edges.clone();
    edges.extend(right.edges.iter().map(|[p, q]| [p + off, q + off]));
    edges.push([a, b + off]);
    PlumbingTree { signs, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        let b = parse_braid("B2: s1 s1 s1").unwrap();
        assert_eq!((b.strands(), b.letters()), (2, &[1, 1, 1][..]));
        let b = parse_braid("B3: s1 s2^-1").unwrap();
        assert_eq!(b.letters(), &[1, -2]);
        assert_eq!(parse_braid("B2: s5"), Err(Error::IndexOutOfRange { index: 5, n: 2 }));
        assert!(parse_braid("B3:").unwrap().letters().is_empty());
        assert!(matches!(parse_braid("B3 s1"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_braid("B3: t1"), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(parse_braid("B3: s0"), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn exponent_sums() {
        assert_eq!(exponent_sum(&parse_braid("B2: s1 s1 s1").unwrap()), 3);
        assert_eq!(exponent_sum(&parse_braid("B4:").unwrap()), 0);
        assert_eq!(exponent_sum(&parse_braid("B3: s1 s2^-1").unwrap()), 0);
    }

    #[test]
    fn hirasawa_examples() {
        assert_eq!(hirasawa_lambda(&parse_braid("B2: s1 s1 s1").unwrap()), 0);
        assert_eq!(hirasawa_lambda(&parse_braid("B2: s1").unwrap()), 2);
        assert_eq!(hirasawa_lambda(&parse_braid("B3: s1 s2^-1").unwrap()), 4);
    }

    #[test]
    fn component_counts() {
        assert_eq!(closed_braid_components(&parse_braid("B2: s1 s1 s1").unwrap()), 1);
        assert_eq!(closed_braid_components(&parse_braid("B3:").unwrap()), 3);
        assert_eq!(closed_braid_components(&parse_braid("B3: s1 s2").unwrap()), 1);
        assert_eq!(closed_braid_components(&parse_braid("B2: s1 s1").unwrap()), 2);
    }

    #[test]
    fn display_round_trip() {
        let b = parse_braid("B4: s1 s3^-1 s2").unwrap();
        assert_eq!(parse_braid(&b.to_string()).unwrap(), b);
    }

    #[test]
    fn plumbing_examples() {
        let one = |s| PlumbingTree { signs: vec![s], edges: vec![] };
        let pos = plumbing_invariants(&one(BandSign::Positive)).unwrap();
        assert_eq!((pos.lambda, pos.mu), (0, 1));
        let neg = plumbing_invariants(&one(BandSign::Negative)).unwrap();
        assert_eq!((neg.lambda, neg.mu), (1, 1));
        let path = PlumbingTree::from_json(r#"{"signs": ["+", "-", "-"], "edges": [[0, 1], [1, 2]]}"#).unwrap();
        let inv = plumbing_invariants(&path).unwrap();
        assert_eq!((inv.lambda, inv.mu), (2, 3));
        let m = plumbing_mirror(&path);
        assert_eq!(m.signs, vec![BandSign::Negative, BandSign::Positive, BandSign::Positive]);
        assert_eq!(plumbing_mirror(&m), path);
    }

    #[test]
    fn not_a_tree() {
        let cyc = r#"{"signs": ["+", "+", "+"], "edges": [[0, 1], [1, 2], [2, 0]]}"#;
        assert!(matches!(PlumbingTree::from_json(cyc), Err(Error::NotATree(_))));
        let split = r#"{"signs": ["+", "+", "+", "-"], "edges": [[0, 1], [2, 3], [3, 2]]}"#;
        assert!(matches!(PlumbingTree::from_json(split), Err(Error::NotATree(_))));
        assert!(matches!(PlumbingTree::from_json(r#"{"signs": []}"#), Err(Error::NotATree(_))));
        assert!(matches!(PlumbingTree::from_json(r#"{"signs": ["*"]}"#), Err(Error::Syntax { .. })));
    }

    fn arb_tree() -> impl Strategy<Value = PlumbingTree> {
        prop::collection::vec((any::<bool>(), any::<prop::sample::Index>()), 1..30).prop_map(|nodes| {
            let signs = nodes
                .iter()
                .map(|(neg, _)| if *neg { BandSign::Negative } else { BandSign::Positive })
                .collect();
            let edges = nodes
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, (_, ix))| [ix.index(k), k])
                .collect();
            PlumbingTree { signs, edges }
        })
    }

    proptest! {
        #[test]
        fn mirror_complements_lambda(t in arb_tree()) {
            let a = plumbing_invariants(&t).unwrap();
            let b = plumbing_invariants(&plumbing_mirror(&t)).unwrap();
            prop_assert_eq!(a.lambda + b.lambda, a.mu);
            prop_assert!(a.lambda <= a.mu);
        }

        #[test]
        fn plumbing_is_additive(s in arb_tree(), t in arb_tree(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
            let j = plumb(&s, a.index(s.signs.len()), &t, b.index(t.signs.len()));
            let (is, it, ij) = (
                plumbing_invariants(&s).unwrap(),
                plumbing_invariants(&t).unwrap(),
                plumbing_invariants(&j).unwrap(),
            );
            prop_assert_eq!(ij.lambda, is.lambda + it.lambda);
            prop_assert_eq!(ij.mu, is.mu + it.mu);
        }

        #[test]
        fn cancelling_pairs_preserve_lambda(
            word in prop::collection::vec((1i64..4, any::<bool>()), 0..20),
            at in any::<prop::sample::Index>(),
            gen in 1i64..4,
        ) {
            let letters: Vec<i64> = word.iter().map(|(i, s)| if *s { *i } else { -*i }).collect();
            let b = BraidWord::new(4, letters.clone()).unwrap();
            let mut longer = letters.clone();
            let k = at.index(letters.len() + 1);
            longer.splice(k..k, [gen, -gen]);
            let c = BraidWord::new(4, longer).unwrap();
            prop_assert_eq!(hirasawa_lambda(&b), hirasawa_lambda(&c));
        }
    }
}
