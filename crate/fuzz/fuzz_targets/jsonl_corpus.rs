#![no_main]

use libfuzzer_sys::fuzz_target;

use fuzzydr::corpus::{parse_corpus, CorpusFormat};

fuzz_target!(|data: &[u8]| {
    // must never panic; errors are fine
    let _ = parse_corpus(data, CorpusFormat::Jsonl);
});
