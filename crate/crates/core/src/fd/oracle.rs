use super::{Attr, Fd, FdSet};
use crate::error::{Error, Result};

pub const DEFAULT_ORACLE_CAP: usize = 10;

impl FdSet {
    /// Exhaustive derivation of every non-trivial singleton-rhs fd of the
    /// closure by saturating a table `X -> D[X]` under reflexivity,
    /// augmentation and transitivity (union and decomposition are implicit in
    /// the table). Independent of [`FdSet::closure`]; exponential in `|U|`.
    pub fn closure_oracle(&self, cap: usize) -> Result<FdSet> {
        let n = self.universe.len();
        if n > cap || n > 20 {
            return Err(Error::capacity("oracle universe size", cap.min(20), n));
        }
        let mask = |s: &super::AttrSet| s.iter().fold(0u32, |m, a| m | (1 << a.0));
        let size = 1usize << n;
        let mut table: Vec<u32> = (0..size as u32).collect();
        for fd in self.iter() {
            table[mask(&fd.lhs) as usize] |= mask(&fd.rhs);
        }
        loop {
            let mut changed = false;
            for x in 0..size {
                let before = table[x];
                let mut d = before | x as u32;
                d |= table[d as usize];
                if d != before {
                    table[x] = d;
                    changed = true;
                }
                for a in 0..n {
                    let bit = 1u32 << a;
                    let xa = x | bit as usize;
                    let aug = table[xa] | d | bit;
                    if aug != table[xa] {
                        table[xa] = aug;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut out = FdSet::empty(self.universe.clone());
        for (x, &d) in table.iter().enumerate().skip(1) {
            for a in 0..n {
                if d & (1 << a) != 0 && x & (1 << a) == 0 {
                    let lhs = (0..n).filter(|i| x & (1 << i) != 0).map(|i| Attr(i as u32)).collect();
                    out.push_unchecked(Fd::single(lhs, Attr(a as u32))?);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_on_chain() {
        let s = FdSet::parse("A -> B\nB -> C\n").unwrap();
        let o = s.closure_oracle(DEFAULT_ORACLE_CAP).unwrap();
        let u = s.universe();
        let fd = |l: &[&str], r: &str| Fd::single(u.set(l).unwrap(), u.attr(r).unwrap()).unwrap();
        assert!(o.contains(&fd(&["A"], "C")));
        assert!(o.contains(&fd(&["A", "C"], "B")));
        assert!(!o.contains(&fd(&["C"], "A")));
        assert!(!o.contains(&fd(&["B"], "A")));
    }

    #[test]
    fn oracle_respects_cap() {
        let names: Vec<String> = (0..11).map(|i| format!("a{i}")).collect();
        let text: String = names.windows(2).map(|w| format!("{} -> {}\n", w[0], w[1])).collect();
        let s = FdSet::parse(&text).unwrap();
        assert!(matches!(s.closure_oracle(10), Err(Error::Capacity { .. })));
    }
}
