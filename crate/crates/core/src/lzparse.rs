//! Incremental (LZ78-style) parsing into shortest words not parsed before.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseResult {
    /// 1-based start of each parsed word.
    starts: Vec<usize>,
    lengths: Vec<usize>,
    /// Index of the earlier word equal to this word minus its last symbol;
    /// words are numbered from 1 and 0 is the empty word.
    headers: Vec<usize>,
    last_symbols: Vec<u32>,
    remainder_length: usize,
    /// The parsed word (or 0 for empty) that the trailing remainder equals.
    remainder_word: usize,
}

impl ParseResult {
    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn headers(&self) -> &[usize] {
        &self.headers
    }

    pub fn last_symbols(&self) -> &[u32] {
        &self.last_symbols
    }

    pub fn word_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn remainder_length(&self) -> usize {
        self.remainder_length
    }

    pub fn remainder_word(&self) -> usize {
        self.remainder_word
    }

    pub fn input_length(&self) -> usize {
        self.lengths.iter().sum::<usize>() + self.remainder_length
    }

    /// Columns: word index, start, length, header word index, last symbol.
    /// A trailing remainder is listed as word `remainder` with an empty last
    /// symbol and the matching parsed word as its header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "word,start,length,header,last_symbol")?;
        for i in 0..self.word_count() {
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                self.starts[i],
                self.lengths[i],
                self.headers[i],
                self.last_symbols[i]
            )?;
        }
        if self.remainder_length > 0 {
            writeln!(
                w,
                "remainder,{},{},{},",
                self.input_length() - self.remainder_length + 1,
                self.remainder_length,
                self.remainder_word
            )?;
        }
        Ok(())
    }
}

/// Parses `sequence` greedily: each new word is the shortest continuation
/// that differs from every word parsed so far. An incomplete final word is
/// kept as the remainder and not counted.
pub fn lz_parse(sequence: &[u32]) -> ParseResult {
    // trie node i is parsed word i; node 0 is the empty word
    let mut children: HashMap<(usize, u32), usize> = HashMap::new();
    let mut words = 0usize;
    let mut out = ParseResult {
        starts: Vec::new(),
        lengths: Vec::new(),
        headers: Vec::new(),
        last_symbols: Vec::new(),
        remainder_length: 0,
        remainder_word: 0,
    };
    let mut node = 0usize;
    let mut start = 0usize;
    for (pos, &symbol) in sequence.iter().enumerate() {
        match children.get(&(node, symbol)) {
            Some(&child) => node = child,
            None => {
                words += 1;
                children.insert((node, symbol), words);
                out.starts.push(start + 1);
                out.lengths.push(pos + 1 - start);
                out.headers.push(node);
                out.last_symbols.push(symbol);
                node = 0;
                start = pos + 1;
            }
        }
    }
    out.remainder_length = sequence.len() - start;
    out.remainder_word = node;
    out
}

/// Theoretical code length `c (ln L + 1)` in nats.
pub fn code_length(parse: &ParseResult, l: u64) -> f64 {
    parse.word_count() as f64 * ((l as f64).ln() + 1.0)
}

/// Entropy estimate `c ln L / L`.
pub fn lz_entropy_estimate(parse: &ParseResult, l: u64) -> f64 {
    let l = l as f64;
    parse.word_count() as f64 * l.ln() / l
}

/// Header-pointer code: one `(header, last symbol)` pair per word, then the
/// dictionary word the remainder equals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub pairs: Vec<(usize, u32)>,
    pub remainder_word: usize,
}

pub fn encode(parse: &ParseResult) -> Encoded {
    Encoded {
        pairs: parse.headers.iter().copied().zip(parse.last_symbols.iter().copied()).collect(),
        remainder_word: parse.remainder_word,
    }
}

pub fn decode(code: &Encoded) -> Result<Vec<u32>> {
    // each word stored as (header, symbol, length) and expanded by walking back
    let mut table: Vec<(usize, u32, usize)> = vec![(0, 0, 0)];
    let mut out = Vec::new();
    let expand = |table: &[(usize, u32, usize)], mut w: usize, out: &mut Vec<u32>| {
        let at = out.len();
        out.resize(at + table[w].2, 0);
        let mut end = out.len();
        while w != 0 {
            end -= 1;
            out[end] = table[w].1;
            w = table[w].0;
        }
    };
    for (i, &(header, symbol)) in code.pairs.iter().enumerate() {
        if header > i {
            return Err(Error::Parse(format!("word {} points at later word {header}", i + 1)));
        }
        table.push((header, symbol, table[header].2 + 1));
        expand(&table, i + 1, &mut out);
    }
    if code.remainder_word >= table.len() {
        return Err(Error::Parse(format!("remainder points at unknown word {}", code.remainder_word)));
    }
    expand(&table, code.remainder_word, &mut out);
    Ok(out)
}
