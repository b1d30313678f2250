use super::Formula;

const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const UNTIL: u8 = 4;
const UNARY: u8 = 5;
const ATOMIC: u8 = 6;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => ATOMIC,
        Formula::Not(_) | Formula::Next(_) | Formula::Globally(_) | Formula::Finally(_) => UNARY,
        Formula::Until(..) => UNTIL,
        Formula::And(..) => AND,
        Formula::Or(..) => OR,
        Formula::Implies(..) => IMPLIES,
    }
}

pub(super) fn infix(f: &Formula) -> String {
    let mut out = String::new();
    write_infix(f, &mut out);
    out
}

fn write_wrapped(f: &Formula, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_infix(f, out);
        out.push(')');
    } else {
        write_infix(f, out);
    }
}

fn write_infix(f: &Formula, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(a) => out.push_str(a),
        Formula::Not(c) | Formula::Next(c) | Formula::Globally(c) | Formula::Finally(c) => {
            let op = match f {
                Formula::Not(_) => "!",
                Formula::Next(_) => "X",
                Formula::Globally(_) => "G",
                _ => "F",
            };
            out.push_str(op);
            let parens = precedence(c) < UNARY;
            if !parens && op != "!" {
                out.push(' ');
            }
            write_wrapped(c, parens, out);
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Until(l, r) => {
            let p = precedence(f);
            let (op, left_assoc) = match f {
                Formula::And(..) => (" & ", true),
                Formula::Or(..) => (" | ", true),
                Formula::Implies(..) => (" -> ", false),
                _ => (" U ", false),
            };
            let (lp, rp) = (precedence(l), precedence(r));
            let (wrap_l, wrap_r) = if left_assoc {
                (lp < p, rp <= p)
            } else {
                (lp <= p, rp < p)
            };
            write_wrapped(l, wrap_l, out);
            out.push_str(op);
            write_wrapped(r, wrap_r, out);
        }
    }
}

pub(super) fn prefix(f: &Formula) -> String {
    let mut toks: Vec<&str> = Vec::new();
    push_prefix(f, &mut toks);
    toks.join(" ")
}

fn push_prefix<'a>(f: &'a Formula, toks: &mut Vec<&'a str>) {
    let op = match f {
        Formula::True => "true",
        Formula::False => "false",
        Formula::Atom(a) => a.as_str(),
        Formula::Not(_) => "!",
        Formula::And(..) => "&",
        Formula::Or(..) => "|",
        Formula::Implies(..) => "->",
        Formula::Next(_) => "X",
        Formula::Globally(_) => "G",
        Formula::Finally(_) => "F",
        Formula::Until(..) => "U",
    };
    toks.push(op);
    for c in f.children() {
        push_prefix(c, toks);
    }
}
