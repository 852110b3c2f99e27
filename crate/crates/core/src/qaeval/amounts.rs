use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// A euro amount held exactly, in cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Amount(pub i64);

impl Amount {
    pub fn from_cents(cents: i64) -> Self {
        Self(cents)
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Parses a single Greek-formatted amount such as `73.225,56 €`.
    pub fn parse(text: &str) -> Option<Self> {
        match extract_amounts(text).as_slice() {
            [a] => Some(*a),
            _ => None,
        }
    }
}

/// Greek form: `.` between thousands, `,` before the two decimals.
impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = (abs / 100).to_string();
        let mut grouped = String::new();
        for (i, c) in int.chars().enumerate() {
            if i > 0 && (int.len() - i) % 3 == 0 {
                grouped.push('.');
            }
            grouped.push(c);
        }
        write!(f, "{sign}{grouped},{:02}", abs % 100)
    }
}

impl std::ops::Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Self) -> Self {
        Amount(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Self) -> Self {
        Amount(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Amount {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        Amount(iter.map(|a| a.0).sum())
    }
}

fn amount_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?P<int>\d{1,3}(?:\.\d{3})+|\d+)(?:,(?P<dec>\d{1,2}))?(?P<cur>\s?(?:€|ευρώ|ΕΥΡΩ|EUR))?").expect("static regex")
    })
}

/// Amounts in order of appearance, duplicates kept. A number counts when it
/// has a decimal part (`60,00`) or a currency marker (`100 €`); bare
/// integers are ignored.
pub fn extract_amounts(text: &str) -> Vec<Amount> {
    let mut out = Vec::new();
    for caps in amount_re().captures_iter(text) {
        let whole = caps.get(0).expect("match");
        let before = text[..whole.start()].chars().next_back();
        if before.is_some_and(|c| c.is_ascii_digit() || c == '.' || c == ',') {
            continue;
        }
        let mut rest = text[whole.end()..].chars();
        let next = rest.next();
        if next.is_some_and(|c| c.is_ascii_digit()) {
            continue;
        }
        // "12.03.2021" or "3,14159" continue as a number.
        if caps.name("cur").is_none() && next.is_some_and(|c| c == '.' || c == ',') && rest.next().is_some_and(|c| c.is_ascii_digit()) {
            continue;
        }
        let dec = caps.name("dec");
        if dec.is_none() && caps.name("cur").is_none() {
            continue;
        }
        let int: String = caps["int"].chars().filter(char::is_ascii_digit).collect();
        let Ok(int) = int.parse::<i64>() else { continue };
        let cents = match dec.map(|d| d.as_str()) {
            None => 0,
            Some(d) if d.len() == 1 => d.parse::<i64>().unwrap_or(0) * 10,
            Some(d) => d.parse::<i64>().unwrap_or(0),
        };
        if let Some(total) = int.checked_mul(100).and_then(|v| v.checked_add(cents)) {
            out.push(Amount(total));
        }
    }
    out
}

/// Multiset Jaccard of the amounts in both texts, as a percentage. With no
/// amounts in `truth`, 100 if `predicted` has none either, else 0.
pub fn amount_match(predicted: &str, truth: &str) -> f64 {
    let count = |text: &str| {
        let mut m: HashMap<Amount, usize> = HashMap::new();
        for a in extract_amounts(text) {
            *m.entry(a).or_default() += 1;
        }
        m
    };
    let (p, t) = (count(predicted), count(truth));
    if t.is_empty() {
        return if p.is_empty() { 100.0 } else { 0.0 };
    }
    let mut inter = 0;
    let mut union = 0;
    for key in p.keys().chain(t.keys().filter(|k| !p.contains_key(k))) {
        let (a, b) = (p.get(key).copied().unwrap_or(0), t.get(key).copied().unwrap_or(0));
        inter += a.min(b);
        union += a.max(b);
    }
    100.0 * inter as f64 / union as f64
}
