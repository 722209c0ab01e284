//! CNF formulas, DIMACS text, brute-force model counting and 2SAT.

use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Error, Result};

/// A literal over a 0-based variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Literal {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Literal {
        Literal { var, positive: false }
    }

    /// From a DIMACS integer (`3` is x3, `-3` is not x3).
    pub fn from_dimacs(v: i64) -> Result<Literal> {
        if v == 0 {
            return Err(Error::Structure("literal 0 is the clause terminator".into()));
        }
        Ok(Literal { var: v.unsigned_abs() as usize - 1, positive: v > 0 })
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }

    pub fn eval(self, assignment: u64) -> bool {
        (assignment >> self.var & 1 == 1) == self.positive
    }

    pub fn negated(self) -> Literal {
        Literal { var: self.var, positive: !self.positive }
    }
}

/// A CNF formula; clause widths are checked by the gadget that consumes it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    pub vars: usize,
    pub clauses: Vec<Vec<Literal>>,
}

/// Hard cap on variables for brute-force enumeration.
pub const MAX_ENUM_VARS: usize = 20;

impl CnfFormula {
    pub fn new(vars: usize, clauses: Vec<Vec<Literal>>) -> Result<CnfFormula> {
        for c in &clauses {
            if c.is_empty() {
                return Err(Error::Structure("empty clause".into()));
            }
            if let Some(l) = c.iter().find(|l| l.var >= vars) {
                return Err(Error::Structure(format!("variable {} out of range 1..={vars}", l.var + 1)));
            }
        }
        Ok(CnfFormula { vars, clauses })
    }

    /// Builds from DIMACS-style signed integers.
    pub fn from_ints(vars: usize, clauses: &[&[i64]]) -> Result<CnfFormula> {
        let cl = clauses
            .iter()
            .map(|c| c.iter().map(|&v| Literal::from_dimacs(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        CnfFormula::new(vars, cl)
    }

    pub fn require_width(&self, width: usize) -> Result<()> {
        match self.clauses.iter().position(|c| c.len() != width) {
            Some(j) => Err(Error::Structure(format!(
                "clause {} has {} literals, expected {width}",
                j + 1,
                self.clauses[j].len()
            ))),
            None => Ok(()),
        }
    }

    pub fn eval(&self, assignment: u64) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.eval(assignment)))
    }

    fn check_enum(&self) -> Result<()> {
        if self.vars > MAX_ENUM_VARS {
            return Err(Error::StateCap { count: 1u128 << self.vars, cap: 1u128 << MAX_ENUM_VARS });
        }
        Ok(())
    }

    /// Exact number of satisfying assignments by enumeration.
    pub fn count_models(&self) -> Result<u64> {
        self.check_enum()?;
        Ok((0..1u64 << self.vars).filter(|&a| self.eval(a)).count() as u64)
    }

    /// First satisfying assignment in ascending order, by enumeration.
    pub fn brute_force(&self) -> Result<Option<u64>> {
        self.check_enum()?;
        Ok((0..1u64 << self.vars).find(|&a| self.eval(a)))
    }

    /// Parses DIMACS text: `c` comments, a `p cnf <vars> <clauses>` header,
    /// then zero-terminated clauses.
    pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut cur: Vec<Literal> = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            let at = |m: &str| Error::Structure(format!("line {}: {m}", no + 1));
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(at("expected `p cnf <vars> <clauses>`"));
                }
                let v = parts[1].parse().map_err(|_| at("bad variable count"))?;
                let m = parts[2].parse().map_err(|_| at("bad clause count"))?;
                header = Some((v, m));
                continue;
            }
            if header.is_none() {
                return Err(at("clause before the `p cnf` header"));
            }
            for tok in line.split_whitespace() {
                let v: i64 = tok.parse().map_err(|_| at(&format!("bad literal {tok:?}")))?;
                if v == 0 {
                    clauses.push(std::mem::take(&mut cur));
                } else {
                    cur.push(Literal::from_dimacs(v)?);
                }
            }
        }
        let (vars, m) = header.ok_or_else(|| Error::Structure("missing `p cnf` header".into()))?;
        if !cur.is_empty() {
            return Err(Error::Structure("last clause is not terminated by 0".into()));
        }
        if clauses.len() != m {
            return Err(Error::Structure(format!("header announces {m} clauses, found {}", clauses.len())));
        }
        CnfFormula::new(vars, clauses)
    }

    /// Solves a formula whose clauses have at most two literals via the
    /// implication graph. Returns a model as a bit mask.
    pub fn solve_2sat(&self) -> Result<Option<u64>> {
        if self.clauses.iter().any(|c| c.len() > 2) {
            return Err(Error::Structure("2SAT needs clauses of width at most 2".into()));
        }
        if self.vars > 64 {
            return Err(Error::Structure("2SAT models are returned as 64-bit masks".into()));
        }
        let node = |l: Literal| NodeIndex::new(2 * l.var + usize::from(!l.positive));
        let mut g: DiGraph<(), ()> = DiGraph::new();
        for _ in 0..2 * self.vars {
            g.add_node(());
        }
        for c in &self.clauses {
            let (a, b) = (c[0], *c.get(1).unwrap_or(&c[0]));
            g.add_edge(node(a.negated()), node(b), ());
            g.add_edge(node(b.negated()), node(a), ());
        }
        // tarjan_scc yields components in reverse topological order
        let mut comp = vec![0usize; 2 * self.vars];
        for (idx, scc) in tarjan_scc(&g).into_iter().enumerate() {
            for v in scc {
                comp[v.index()] = idx;
            }
        }
        let mut model = 0u64;
        for v in 0..self.vars {
            let (p, n) = (comp[2 * v], comp[2 * v + 1]);
            if p == n {
                return Ok(None);
            }
            if p < n {
                model |= 1 << v;
            }
        }
        Ok(Some(model))
    }
}

impl fmt::Display for CnfFormula {
    /// DIMACS text.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.vars, self.clauses.len())?;
        for c in &self.clauses {
            for l in c {
                write!(f, "{} ", l.to_dimacs())?;
            }
            writeln!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_round_trip() {
        let f = CnfFormula::from_ints(3, &[&[1, -2, 3], &[-1, -1, 2]]).unwrap();
        let text = f.to_string();
        assert_eq!(text, "p cnf 3 2\n1 -2 3 0\n-1 -1 2 0\n");
        assert_eq!(CnfFormula::parse_dimacs(&text).unwrap(), f);
        assert!(CnfFormula::parse_dimacs("p cnf 2 1\n1 2\n").is_err());
        assert!(CnfFormula::parse_dimacs("p cnf 1 1\n2 0\n").is_err());
    }

    #[test]
    fn model_counts() {
        let f = CnfFormula::from_ints(3, &[&[1, 2, 3], &[-1, -2, -3]]).unwrap();
        assert_eq!(f.count_models().unwrap(), 6);
        let g = CnfFormula::from_ints(3, &[&[1, 2, 3]]).unwrap();
        assert_eq!(g.count_models().unwrap(), 7);
    }

    #[test]
    fn two_sat_agrees_with_enumeration() {
        let sat = CnfFormula::from_ints(3, &[&[1, 2], &[-1, 3], &[-2, -3]]).unwrap();
        let m = sat.solve_2sat().unwrap().unwrap();
        assert!(sat.eval(m));
        let unsat = CnfFormula::from_ints(1, &[&[1, 1], &[-1, -1]]).unwrap();
        assert_eq!(unsat.solve_2sat().unwrap(), None);
        let unit = CnfFormula::from_ints(2, &[&[-1], &[1, 2]]).unwrap();
        assert_eq!(unit.solve_2sat().unwrap(), Some(0b10));
    }
}
