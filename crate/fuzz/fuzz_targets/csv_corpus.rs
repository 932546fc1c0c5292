#![no_main]

use libfuzzer_sys::fuzz_target;

use fuzzydr::corpus::{parse_corpus, CorpusFormat};

fuzz_target!(|data: &[u8]| {
    let _ = parse_corpus(data, CorpusFormat::Csv);
});
