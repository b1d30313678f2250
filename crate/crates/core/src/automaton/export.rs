use std::collections::BTreeMap;
use std::fmt::Write;

use super::{StateId, TraceAutomaton};

fn letter_text(a: &TraceAutomaton, letter: usize) -> String {
    format!("{{{}}}", a.alphabet().letter_atoms(letter).join(","))
}

impl TraceAutomaton {
    /// Line-oriented text dump. See `docs/FORMATS.md` for the layout.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let k = self.alphabet().len();
        out.push_str("automaton\n");
        writeln!(out, "universe {}", self.universe().join(" ")).unwrap();
        writeln!(out, "mode {}", self.mode()).unwrap();
        writeln!(out, "initial {}", self.initial()).unwrap();
        writeln!(out, "states {}", self.num_states()).unwrap();
        for q in 0..self.num_states() as StateId {
            writeln!(
                out,
                "state {} accepting={} dead={} {}",
                q,
                self.is_accepting(q) as u8,
                self.is_dead(q) as u8,
                self.residual(q).to_infix()
            )
            .unwrap();
        }
        writeln!(out, "edges {}", self.num_edges()).unwrap();
        for q in 0..self.num_states() as StateId {
            for l in 0..k {
                writeln!(
                    out,
                    "edge {} {} {}",
                    q,
                    letter_text(self, l),
                    self.step(q, l)
                )
                .unwrap();
            }
        }
        out
    }

    /// Graphviz rendering. Letters sharing a source and target are merged
    /// into one edge.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let k = self.alphabet().len();
        out.push_str("digraph automaton {\n");
        out.push_str("  rankdir=LR;\n");
        out.push_str("  init [shape=point];\n");
        writeln!(out, "  init -> q{};", self.initial()).unwrap();
        for q in 0..self.num_states() as StateId {
            let shape = if self.is_accepting(q) {
                "doublecircle"
            } else {
                "circle"
            };
            let fill = if self.is_dead(q) {
                ", style=filled, fillcolor=gray80"
            } else {
                ""
            };
            writeln!(
                out,
                "  q{} [label=\"{}\", shape={}{}];",
                q,
                self.residual(q).to_infix(),
                shape,
                fill
            )
            .unwrap();
        }
        for q in 0..self.num_states() as StateId {
            let mut grouped: BTreeMap<StateId, Vec<String>> = BTreeMap::new();
            for l in 0..k {
                grouped
                    .entry(self.step(q, l))
                    .or_default()
                    .push(letter_text(self, l));
            }
            for (r, letters) in grouped {
                writeln!(
                    out,
                    "  q{} -> q{} [label=\"{}\"];",
                    q,
                    r,
                    letters.join(", ")
                )
                .unwrap();
            }
        }
        out.push_str("}\n");
        out
    }
}
