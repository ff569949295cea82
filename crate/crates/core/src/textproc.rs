//! Spanish text normalization and rule-based grapheme-to-phoneme conversion
//! with Latin-American (Costa Rican) conventions.
//!
//! The rule table is documented in `docs/g2p-rules.md`.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("cannot expand token '{0}'")]
    Unexpandable(String),
    #[error("unsupported character '{ch}' in '{context}'")]
    UnmappableChar { ch: char, context: String },
    #[error("text contains no words")]
    Empty,
    #[error("unknown phoneme symbol '{0}'")]
    UnknownSymbol(String),
    #[error("malformed phonetic spec: {0}")]
    MalformedSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phoneme {
    A,
    E,
    I,
    O,
    U,
    /// Glide /w/.
    W,
    /// Glide /j/.
    J,
    P,
    B,
    T,
    D,
    K,
    G,
    F,
    S,
    X,
    /// Affricate /tʃ/.
    Ch,
    /// Palatal /ʝ/ (yeísmo: ll, consonantal y).
    Y,
    M,
    N,
    /// Palatal nasal /ɲ/.
    Ny,
    L,
    /// Trill /r/.
    Trill,
    /// Tap /ɾ/.
    Tap,
    Sil,
    /// Short pause between words.
    Sp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhonemeKind {
    Vowel,
    Glide,
    Consonant,
    Silence,
}

impl Phoneme {
    pub const ALL: [Phoneme; 26] = [
        Phoneme::A,
        Phoneme::E,
        Phoneme::I,
        Phoneme::O,
        Phoneme::U,
        Phoneme::W,
        Phoneme::J,
        Phoneme::P,
        Phoneme::B,
        Phoneme::T,
        Phoneme::D,
        Phoneme::K,
        Phoneme::G,
        Phoneme::F,
        Phoneme::S,
        Phoneme::X,
        Phoneme::Ch,
        Phoneme::Y,
        Phoneme::M,
        Phoneme::N,
        Phoneme::Ny,
        Phoneme::L,
        Phoneme::Trill,
        Phoneme::Tap,
        Phoneme::Sil,
        Phoneme::Sp,
    ];

    pub fn symbol(self) -> &'static str {
        use Phoneme::*;
        match self {
            A => "a",
            E => "e",
            I => "i",
            O => "o",
            U => "u",
            W => "w",
            J => "j",
            P => "p",
            B => "b",
            T => "t",
            D => "d",
            K => "k",
            G => "g",
            F => "f",
            S => "s",
            X => "x",
            Ch => "tʃ",
            Y => "ʝ",
            M => "m",
            N => "n",
            Ny => "ɲ",
            L => "l",
            Trill => "r",
            Tap => "ɾ",
            Sil => "sil",
            Sp => "sp",
        }
    }

    pub fn kind(self) -> PhonemeKind {
        use Phoneme::*;
        match self {
            A | E | I | O | U => PhonemeKind::Vowel,
            W | J => PhonemeKind::Glide,
            Sil | Sp => PhonemeKind::Silence,
            _ => PhonemeKind::Consonant,
        }
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Phoneme {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        Phoneme::ALL
            .iter()
            .copied()
            .find(|p| p.symbol() == s)
            .ok_or_else(|| TextError::UnknownSymbol(s.to_string()))
    }
}

/// Phone sequence with the index of the first phone of every word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneticSpec {
    pub phones: Vec<Phoneme>,
    pub word_boundaries: Vec<usize>,
}

impl PhoneticSpec {
    pub fn new(phones: Vec<Phoneme>, word_boundaries: Vec<usize>) -> Result<Self, TextError> {
        let spec = Self {
            phones,
            word_boundaries,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), TextError> {
        if self.phones.first() != Some(&Phoneme::Sil) || self.phones.last() != Some(&Phoneme::Sil) {
            return Err(TextError::MalformedSpec(
                "must begin and end with sil".into(),
            ));
        }
        let increasing = self.word_boundaries.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.word_boundaries.iter().all(|&b| b < self.phones.len());
        if !increasing || !in_range {
            return Err(TextError::MalformedSpec(
                "word boundaries must be strictly increasing and in range".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    /// Whitespace-separated symbols; word starts are not encoded.
    pub fn to_line(&self) -> String {
        self.phones
            .iter()
            .map(|p| p.symbol())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses [`to_line`](Self::to_line) output. Word boundaries are
    /// recovered as the first phone after every silence marker.
    pub fn parse_line(line: &str) -> Result<Self, TextError> {
        let phones = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Phoneme>, _>>()?;
        let word_boundaries = (1..phones.len())
            .filter(|&i| {
                phones[i].kind() != PhonemeKind::Silence
                    && phones[i - 1].kind() == PhonemeKind::Silence
            })
            .collect();
        Self::new(phones, word_boundaries)
    }
}

const PAUSE_PUNCT: &[char] = &[',', '.', ';', ':', '!', '?', '…'];
const DROPPED_PUNCT: &[char] = &['¡', '¿', '"', '\'', '(', ')', '-', '«', '»'];
const PAUSE_TOKEN: &str = ",";

fn is_letter(c: char) -> bool {
    c.is_ascii_alphabetic() || "ñÑáéíóúüÁÉÍÓÚÜ".contains(c)
}

fn is_supported(c: char) -> bool {
    is_letter(c)
        || c.is_ascii_digit()
        || c.is_whitespace()
        || PAUSE_PUNCT.contains(&c)
        || DROPPED_PUNCT.contains(&c)
}

/// Distinct characters of `text` that the normalizer does not accept, in
/// order of first appearance.
pub fn unsupported_chars(text: &str) -> Vec<char> {
    let mut out = Vec::new();
    for c in text.chars().filter(|&c| !is_supported(c)) {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

const UNITS: [&str; 30] = [
    "cero",
    "uno",
    "dos",
    "tres",
    "cuatro",
    "cinco",
    "seis",
    "siete",
    "ocho",
    "nueve",
    "diez",
    "once",
    "doce",
    "trece",
    "catorce",
    "quince",
    "dieciséis",
    "diecisiete",
    "dieciocho",
    "diecinueve",
    "veinte",
    "veintiuno",
    "veintidós",
    "veintitrés",
    "veinticuatro",
    "veinticinco",
    "veintiséis",
    "veintisiete",
    "veintiocho",
    "veintinueve",
];
const TENS: [&str; 10] = [
    "",
    "",
    "",
    "treinta",
    "cuarenta",
    "cincuenta",
    "sesenta",
    "setenta",
    "ochenta",
    "noventa",
];
const HUNDREDS: [&str; 10] = [
    "",
    "ciento",
    "doscientos",
    "trescientos",
    "cuatrocientos",
    "quinientos",
    "seiscientos",
    "setecientos",
    "ochocientos",
    "novecientos",
];

fn below_hundred(n: u32) -> String {
    match n {
        0..=29 => UNITS[n as usize].to_string(),
        _ if n.is_multiple_of(10) => TENS[(n / 10) as usize].to_string(),
        _ => format!("{} y {}", TENS[(n / 10) as usize], UNITS[(n % 10) as usize]),
    }
}

fn below_thousand(n: u32) -> String {
    match (n / 100, n % 100) {
        (0, r) => below_hundred(r),
        (1, 0) => "cien".to_string(),
        (h, 0) => HUNDREDS[h as usize].to_string(),
        (h, r) => format!("{} {}", HUNDREDS[h as usize], below_hundred(r)),
    }
}

/// "uno" shortens to "un" before "mil" (and "veintiuno" to "veintiún").
fn apocope(words: String) -> String {
    if words == "uno" {
        "un".into()
    } else if let Some(stem) = words.strip_suffix("veintiuno") {
        format!("{stem}veintiún")
    } else if let Some(stem) = words.strip_suffix(" y uno") {
        format!("{stem} y un")
    } else if let Some(stem) = words.strip_suffix(" uno") {
        format!("{stem} un")
    } else {
        words
    }
}

/// Spanish cardinal for 0..=999_999.
pub fn spell_number(n: u32) -> Option<String> {
    if n > 999_999 {
        return None;
    }
    let (thousands, rest) = (n / 1000, n % 1000);
    Some(match (thousands, rest) {
        (0, r) => below_thousand(r),
        (1, 0) => "mil".into(),
        (1, r) => format!("mil {}", below_thousand(r)),
        (t, 0) => format!("{} mil", apocope(below_thousand(t))),
        (t, r) => format!("{} mil {}", apocope(below_thousand(t)), below_thousand(r)),
    })
}

fn roman_value(c: char) -> Option<u32> {
    Some(match c {
        'I' => 1,
        'V' => 5,
        'X' => 10,
        'L' => 50,
        'C' => 100,
        'D' => 500,
        'M' => 1000,
        _ => return None,
    })
}

fn to_roman(mut n: u32) -> String {
    const TABLE: [(u32, &str); 13] = [
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for (v, s) in TABLE {
        while n >= v {
            out.push_str(s);
            n -= v;
        }
    }
    out
}

/// Upper-case tokens of two or more letters written in canonical roman form.
fn looks_roman(token: &str) -> bool {
    if token.chars().count() < 2 {
        return false;
    }
    let Some(values) = token.chars().map(roman_value).collect::<Option<Vec<_>>>() else {
        return false;
    };
    let mut total = 0i64;
    for (i, &v) in values.iter().enumerate() {
        if values.get(i + 1).is_some_and(|&next| next > v) {
            total -= v as i64;
        } else {
            total += v as i64;
        }
    }
    total > 0 && to_roman(total as u32) == token
}

/// Lower-cases, expands integers, and turns clause punctuation into a
/// standalone `,` pause token. Accented vowels are kept.
pub fn normalize_text(text: &str) -> Result<String, TextError> {
    if let Some(&ch) = unsupported_chars(text).first() {
        return Err(TextError::UnmappableChar {
            ch,
            context: text.to_string(),
        });
    }
    let mut out: Vec<String> = Vec::new();
    let push_pause = |out: &mut Vec<String>| {
        if out.last().is_some_and(|t| t != PAUSE_TOKEN) {
            out.push(PAUSE_TOKEN.to_string());
        }
    };
    for raw in text.split_whitespace() {
        let core =
            raw.trim_matches(|c: char| PAUSE_PUNCT.contains(&c) || DROPPED_PUNCT.contains(&c));
        let trailing_pause = raw
            .trim_end_matches(|c: char| DROPPED_PUNCT.contains(&c))
            .ends_with(|c: char| PAUSE_PUNCT.contains(&c));
        if core.chars().any(|c| c.is_ascii_digit()) {
            if !core.chars().all(|c| c.is_ascii_digit()) {
                return Err(TextError::Unexpandable(core.to_string()));
            }
            let value: u32 = core
                .parse()
                .map_err(|_| TextError::Unexpandable(core.to_string()))?;
            let words =
                spell_number(value).ok_or_else(|| TextError::Unexpandable(core.to_string()))?;
            out.extend(words.split(' ').map(str::to_string));
        } else if looks_roman(core) {
            return Err(TextError::Unexpandable(core.to_string()));
        } else {
            for word in core
                .split(|c: char| !is_letter(c))
                .filter(|w| !w.is_empty())
            {
                out.push(word.to_lowercase());
            }
        }
        if trailing_pause {
            push_pause(&mut out);
        }
    }
    while out.last().is_some_and(|t| t == PAUSE_TOKEN) {
        out.pop();
    }
    Ok(out.join(" "))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Seg {
    Phone(Phoneme),
    /// Unaccented i/u: becomes a glide next to another vowel.
    High(Phoneme),
}

fn is_vowel_letter(c: char) -> bool {
    "aeiouáéíóúü".contains(c)
}

fn is_front(c: Option<&char>) -> bool {
    c.is_some_and(|c| "eiéí".contains(*c))
}

fn word_segments(word: &str) -> Result<Vec<Seg>, TextError> {
    use Phoneme::*;
    let chars: Vec<char> = word.chars().collect();
    let mut segs = Vec::with_capacity(chars.len());
    let mut i = 0;
    let unmappable = |ch| TextError::UnmappableChar {
        ch,
        context: word.to_string(),
    };
    while i < chars.len() {
        let next = chars.get(i + 1);
        let mut step = 1;
        match chars[i] {
            'a' | 'á' => segs.push(Seg::Phone(A)),
            'e' | 'é' => segs.push(Seg::Phone(E)),
            'o' | 'ó' => segs.push(Seg::Phone(O)),
            'í' => segs.push(Seg::Phone(I)),
            'ú' => segs.push(Seg::Phone(U)),
            'i' => segs.push(Seg::High(I)),
            'u' => segs.push(Seg::High(U)),
            'ü' | 'w' => segs.push(Seg::Phone(W)),
            'b' | 'v' => segs.push(Seg::Phone(B)),
            'd' => segs.push(Seg::Phone(D)),
            'f' => segs.push(Seg::Phone(F)),
            'k' => segs.push(Seg::Phone(K)),
            'm' => segs.push(Seg::Phone(M)),
            'n' => segs.push(Seg::Phone(N)),
            'ñ' => segs.push(Seg::Phone(Ny)),
            'p' => segs.push(Seg::Phone(P)),
            't' => segs.push(Seg::Phone(T)),
            's' | 'z' => segs.push(Seg::Phone(S)),
            'j' => segs.push(Seg::Phone(X)),
            'h' => {}
            'l' if next == Some(&'l') => {
                segs.push(Seg::Phone(Y));
                step = 2;
            }
            'l' => segs.push(Seg::Phone(L)),
            'c' if next == Some(&'h') => {
                segs.push(Seg::Phone(Ch));
                step = 2;
            }
            'c' if is_front(next) => segs.push(Seg::Phone(S)),
            'c' => segs.push(Seg::Phone(K)),
            'q' => {
                segs.push(Seg::Phone(K));
                if next == Some(&'u') {
                    step = 2;
                }
            }
            'g' if next == Some(&'u') && is_front(chars.get(i + 2)) => {
                segs.push(Seg::Phone(G));
                step = 2;
            }
            'g' if is_front(next) => segs.push(Seg::Phone(X)),
            'g' => segs.push(Seg::Phone(G)),
            'r' if next == Some(&'r') => {
                segs.push(Seg::Phone(Trill));
                step = 2;
            }
            'r' if i == 0 || (i > 0 && "nls".contains(chars[i - 1])) => {
                segs.push(Seg::Phone(Trill))
            }
            'r' => segs.push(Seg::Phone(Tap)),
            'x' if i == 0 => segs.push(Seg::Phone(S)),
            'x' if i > 0 && chars[i - 1] == 'e' && next.is_some_and(|&c| is_vowel_letter(c)) => {
                segs.push(Seg::Phone(K));
                segs.push(Seg::Phone(S));
            }
            'x' => segs.push(Seg::Phone(X)),
            'y' if next.is_some_and(|&c| is_vowel_letter(c)) => segs.push(Seg::Phone(Y)),
            'y' => segs.push(Seg::High(I)),
            other => return Err(unmappable(other)),
        }
        i += step;
    }
    Ok(segs)
}

fn resolve_glides(segs: &[Seg]) -> Vec<Phoneme> {
    let mut out: Vec<Phoneme> = Vec::with_capacity(segs.len());
    for (k, seg) in segs.iter().enumerate() {
        match *seg {
            Seg::Phone(p) => out.push(p),
            Seg::High(v) => {
                let prev_vowel = out.last().is_some_and(|p| p.kind() == PhonemeKind::Vowel);
                let next_vowel = match segs.get(k + 1) {
                    Some(Seg::High(_)) => true,
                    Some(Seg::Phone(p)) => p.kind() == PhonemeKind::Vowel,
                    None => false,
                };
                if prev_vowel || next_vowel {
                    out.push(if v == Phoneme::I {
                        Phoneme::J
                    } else {
                        Phoneme::W
                    });
                } else {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Phones of a single lower-case word.
pub fn word_to_phones(word: &str) -> Result<Vec<Phoneme>, TextError> {
    Ok(resolve_glides(&word_segments(word)?))
}

/// Converts normalized text into a `sil`-framed phone sequence. Words are
/// separated by `sp`, or by `sil` where the text carries a pause token.
pub fn g2p(normalized: &str) -> Result<PhoneticSpec, TextError> {
    let mut phones = vec![Phoneme::Sil];
    let mut word_boundaries = Vec::new();
    let mut pending_pause = false;
    for token in normalized.split_whitespace() {
        if token == PAUSE_TOKEN {
            pending_pause = true;
            continue;
        }
        let word = word_to_phones(token)?;
        if word.is_empty() {
            continue;
        }
        if !word_boundaries.is_empty() {
            phones.push(if pending_pause {
                Phoneme::Sil
            } else {
                Phoneme::Sp
            });
        }
        pending_pause = false;
        word_boundaries.push(phones.len());
        phones.extend(word);
    }
    if word_boundaries.is_empty() {
        return Err(TextError::Empty);
    }
    phones.push(Phoneme::Sil);
    PhoneticSpec::new(phones, word_boundaries)
}

/// `normalize_text` followed by `g2p`.
pub fn phonetize(text: &str) -> Result<PhoneticSpec, TextError> {
    g2p(&normalize_text(text)?)
}
