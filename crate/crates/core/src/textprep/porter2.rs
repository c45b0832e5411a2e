//! The Snowball English ("Porter2") stemmer.
//!
//! Works on a byte buffer where `Y` marks a consonantal y. Regions R1/R2
//! are byte offsets into the buffer.

const EXCEPTIONS: &[(&str, &str)] = &[
    ("skis", "ski"),
    ("skies", "sky"),
    ("dying", "die"),
    ("lying", "lie"),
    ("tying", "tie"),
    ("idly", "idl"),
    ("gently", "gentl"),
    ("ugly", "ugli"),
    ("early", "earli"),
    ("only", "onli"),
    ("singly", "singl"),
    ("sky", "sky"),
    ("news", "news"),
    ("howe", "howe"),
    ("atlas", "atlas"),
    ("cosmos", "cosmos"),
    ("bias", "bias"),
    ("andes", "andes"),
];

const POST_1A_INVARIANT: &[&str] = &[
    "inning", "outing", "canning", "herring", "earring", "proceed", "exceed", "succeed",
];

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn is_double(a: u8, b: u8) -> bool {
    a == b && matches!(a, b'b' | b'd' | b'f' | b'g' | b'm' | b'n' | b'p' | b'r' | b't')
}

fn is_li_ending(c: u8) -> bool {
    matches!(c, b'c' | b'd' | b'e' | b'g' | b'h' | b'k' | b'm' | b'n' | b'r' | b't')
}

struct Word {
    b: Vec<u8>,
    r1: usize,
    r2: usize,
}

impl Word {
    fn ends(&self, s: &str) -> bool {
        self.b.ends_with(s.as_bytes())
    }

    /// Start offset of suffix `s` (caller checked `ends`).
    fn suffix_start(&self, s: &str) -> usize {
        self.b.len() - s.len()
    }

    fn replace(&mut self, suffix: &str, with: &str) {
        let start = self.suffix_start(suffix);
        self.b.truncate(start);
        self.b.extend_from_slice(with.as_bytes());
    }

    fn longest<'a>(&self, suffixes: &[&'a str]) -> Option<&'a str> {
        suffixes
            .iter()
            .filter(|s| self.ends(s))
            .max_by_key(|s| s.len())
            .copied()
    }

    fn in_r1(&self, suffix: &str) -> bool {
        self.suffix_start(suffix) >= self.r1
    }

    fn in_r2(&self, suffix: &str) -> bool {
        self.suffix_start(suffix) >= self.r2
    }

    fn has_vowel(&self, end: usize) -> bool {
        self.b[..end].iter().any(|&c| is_vowel(c))
    }

    /// Short syllable ending at the end of `b[..end]`.
    fn ends_short_syllable(&self, end: usize) -> bool {
        let b = &self.b[..end];
        let n = b.len();
        if n >= 3 {
            let (c0, c1, c2) = (b[n - 3], b[n - 2], b[n - 1]);
            if !is_vowel(c0) && is_vowel(c1) && !is_vowel(c2) && !matches!(c2, b'w' | b'x' | b'Y')
            {
                return true;
            }
        }
        n == 2 && is_vowel(b[0]) && !is_vowel(b[1])
    }

    fn is_short(&self) -> bool {
        self.r1 >= self.b.len() && self.ends_short_syllable(self.b.len())
    }
}

fn region_after(b: &[u8], from: usize) -> usize {
    let mut i = from;
    while i < b.len() && !is_vowel(b[i]) {
        i += 1;
    }
    while i < b.len() && is_vowel(b[i]) {
        i += 1;
    }
    if i < b.len() {
        i + 1
    } else {
        b.len()
    }
}

fn mark_regions(b: &[u8]) -> (usize, usize) {
    let r1 = ["gener", "commun", "arsen"]
        .iter()
        .find(|p| b.starts_with(p.as_bytes()))
        .map(|p| p.len())
        .unwrap_or_else(|| region_after(b, 0));
    let r2 = region_after(b, r1);
    (r1, r2)
}

fn step0(w: &mut Word) {
    if let Some(s) = w.longest(&["'", "'s", "'s'"]) {
        w.replace(s, "");
    }
}

fn step1a(w: &mut Word) {
    match w.longest(&["sses", "ied", "ies", "s", "us", "ss"]) {
        Some("sses") => w.replace("sses", "ss"),
        Some(s @ ("ied" | "ies")) => {
            let rep = if w.suffix_start(s) > 1 { "i" } else { "ie" };
            w.replace(s, rep);
        }
        Some("s") => {
            let start = w.suffix_start("s");
            if start >= 1 && w.has_vowel(start - 1) {
                w.replace("s", "");
            }
        }
        _ => {}
    }
}

fn step1b(w: &mut Word) {
    let suffixes = ["eed", "eedly", "ed", "edly", "ing", "ingly"];
    match w.longest(&suffixes) {
        Some(s @ ("eed" | "eedly")) => {
            if w.in_r1(s) {
                w.replace(s, "ee");
            }
        }
        Some(s) => {
            let start = w.suffix_start(s);
            if !w.has_vowel(start) {
                return;
            }
            w.b.truncate(start);
            let n = w.b.len();
            if w.ends("at") || w.ends("bl") || w.ends("iz") {
                w.b.push(b'e');
            } else if n >= 2 && is_double(w.b[n - 2], w.b[n - 1]) {
                w.b.pop();
            } else if w.is_short() {
                w.b.push(b'e');
            }
        }
        None => {}
    }
}

fn step1c(w: &mut Word) {
    let n = w.b.len();
    if n >= 3 && matches!(w.b[n - 1], b'y' | b'Y') && !is_vowel(w.b[n - 2]) {
        w.b[n - 1] = b'i';
    }
}

fn step2(w: &mut Word) {
    const RULES: &[(&str, &str)] = &[
        ("tional", "tion"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("abli", "able"),
        ("entli", "ent"),
        ("izer", "ize"),
        ("ization", "ize"),
        ("ational", "ate"),
        ("ation", "ate"),
        ("ator", "ate"),
        ("alism", "al"),
        ("aliti", "al"),
        ("alli", "al"),
        ("fulness", "ful"),
        ("ousli", "ous"),
        ("ousness", "ous"),
        ("iveness", "ive"),
        ("iviti", "ive"),
        ("biliti", "ble"),
        ("bli", "ble"),
        ("ogi", "og"),
        ("fulli", "ful"),
        ("lessli", "less"),
        ("li", ""),
    ];
    let suffixes: Vec<&str> = RULES.iter().map(|(s, _)| *s).collect();
    let Some(s) = w.longest(&suffixes) else {
        return;
    };
    if !w.in_r1(s) {
        return;
    }
    let start = w.suffix_start(s);
    match s {
        "ogi" => {
            if start >= 1 && w.b[start - 1] == b'l' {
                w.replace(s, "og");
            }
        }
        "li" => {
            if start >= 1 && is_li_ending(w.b[start - 1]) {
                w.replace(s, "");
            }
        }
        _ => {
            let rep = RULES.iter().find(|(k, _)| *k == s).map(|(_, r)| *r).unwrap();
            w.replace(s, rep);
        }
    }
}

fn step3(w: &mut Word) {
    const RULES: &[(&str, &str)] = &[
        ("tional", "tion"),
        ("ational", "ate"),
        ("alize", "al"),
        ("icate", "ic"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ful", ""),
        ("ness", ""),
        ("ative", ""),
    ];
    let suffixes: Vec<&str> = RULES.iter().map(|(s, _)| *s).collect();
    let Some(s) = w.longest(&suffixes) else {
        return;
    };
    if !w.in_r1(s) {
        return;
    }
    if s == "ative" {
        if w.in_r2(s) {
            w.replace(s, "");
        }
        return;
    }
    let rep = RULES.iter().find(|(k, _)| *k == s).map(|(_, r)| *r).unwrap();
    w.replace(s, rep);
}

fn step4(w: &mut Word) {
    let suffixes = [
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ism",
        "ate", "iti", "ous", "ive", "ize", "ion",
    ];
    let Some(s) = w.longest(&suffixes) else {
        return;
    };
    if !w.in_r2(s) {
        return;
    }
    if s == "ion" {
        let start = w.suffix_start(s);
        if start >= 1 && matches!(w.b[start - 1], b's' | b't') {
            w.replace(s, "");
        }
        return;
    }
    w.replace(s, "");
}

fn step5(w: &mut Word) {
    let n = w.b.len();
    if w.ends("e") {
        let start = n - 1;
        if start >= w.r2 || (start >= w.r1 && !w.ends_short_syllable(start)) {
            w.b.pop();
        }
    } else if w.ends("l") && n > w.r2 && n >= 2 && w.b[n - 2] == b'l' {
        w.b.pop();
    }
}

/// Stems a lowercase word with the Snowball English algorithm. Apostrophes
/// are accepted; any other non `a-z` byte leaves the word unchanged.
pub fn stem(word: &str) -> String {
    if let Some((_, s)) = EXCEPTIONS.iter().find(|(w, _)| *w == word) {
        return (*s).to_string();
    }
    if word.len() < 3 || !word.bytes().all(|c| c.is_ascii_lowercase() || c == b'\'') {
        return word.to_string();
    }

    let mut b: Vec<u8> = word.as_bytes().to_vec();
    if b[0] == b'\'' {
        b.remove(0);
    }
    if b.first() == Some(&b'y') {
        b[0] = b'Y';
    }
    for i in 1..b.len() {
        if b[i] == b'y' && is_vowel(b[i - 1]) {
            b[i] = b'Y';
        }
    }
    let (r1, r2) = mark_regions(&b);
    let mut w = Word { b, r1, r2 };

    step0(&mut w);
    step1a(&mut w);
    let after_1a = String::from_utf8_lossy(&w.b).into_owned();
    if POST_1A_INVARIANT.contains(&after_1a.as_str()) {
        return after_1a;
    }
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5(&mut w);

    for c in w.b.iter_mut() {
        if *c == b'Y' {
            *c = b'y';
        }
    }
    String::from_utf8(w.b).expect("ascii")
}

#[cfg(test)]
mod tests {
    use super::stem;

    #[test]
    fn examples() {
        for (w, s) in [
            ("consign", "consign"),
            ("consigned", "consign"),
            ("knightly", "knight"),
            ("generously", "generous"),
            ("cries", "cri"),
            ("ties", "tie"),
            ("senators", "senat"),
            ("senator", "senat"),
            ("skies", "sky"),
        ] {
            assert_eq!(stem(w), s, "{w}");
        }
    }
}
