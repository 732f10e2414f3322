//! Files written by libjpeg: parse, table recovery and decode agreement with
//! libjpeg's own output.

use std::fs;
use std::path::{Path, PathBuf};

use ephemera_core::jpeg::{
    decode_coefficients, decode_with, parse_jfif, serialize_jfif, Arithmetic, CodecHooks,
    DecodeOptions, JpegError,
};
use serde_json::Value;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus")
}

struct Fixture {
    name: String,
    jpeg: Vec<u8>,
    meta: Value,
    reference: Vec<u8>,
}

fn fixtures() -> Vec<Fixture> {
    let mut names: Vec<String> = fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "jpg").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let dir = corpus_dir();
            Fixture {
                jpeg: fs::read(dir.join(format!("{name}.jpg"))).unwrap(),
                meta: serde_json::from_slice(&fs::read(dir.join(format!("{name}.json"))).unwrap())
                    .unwrap(),
                reference: fs::read(dir.join(format!("{name}.rgb"))).unwrap(),
                name,
            }
        })
        .collect()
}

#[test]
fn corpus_has_twenty_files() {
    assert_eq!(fixtures().len(), 20);
}

#[test]
fn parse_recovers_dimensions_and_tables() {
    for f in fixtures() {
        let img = parse_jfif(&f.jpeg).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        assert_eq!(
            img.width() as u64,
            f.meta["width"].as_u64().unwrap(),
            "{}",
            f.name
        );
        assert_eq!(
            img.height() as u64,
            f.meta["height"].as_u64().unwrap(),
            "{}",
            f.name
        );
        assert_eq!(
            img.frame.components.len() as u64,
            f.meta["components"].as_u64().unwrap(),
            "{}",
            f.name
        );
        for (id, table) in f.meta["quantization"].as_object().unwrap() {
            let id: usize = id.parse().unwrap();
            let expected: Vec<u16> = table
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap() as u16)
                .collect();
            let parsed = img.quant_tables[id].as_ref().expect("table present");
            assert_eq!(
                parsed.values().as_slice(),
                expected.as_slice(),
                "{} table {id}",
                f.name
            );
        }
    }
}

#[test]
fn reserialized_files_parse_identically() {
    for f in fixtures() {
        let img = parse_jfif(&f.jpeg).unwrap();
        let again = parse_jfif(&serialize_jfif(&img).unwrap()).unwrap();
        assert_eq!(img, again, "{}", f.name);
    }
}

fn diff_histogram(ours: &[u8], reference: &[u8]) -> [usize; 256] {
    let mut hist = [0usize; 256];
    for (a, b) in ours.iter().zip(reference) {
        hist[a.abs_diff(*b) as usize] += 1;
    }
    hist
}

#[test]
fn decode_matches_libjpeg() {
    for f in fixtures() {
        let img = parse_jfif(&f.jpeg).unwrap();
        let ours = decode_with(
            &img,
            DecodeOptions {
                arithmetic: Arithmetic::Integer,
            },
            &mut CodecHooks::none(),
        )
        .unwrap();
        assert_eq!(ours.as_bytes().len(), f.reference.len(), "{}", f.name);
        let hist = diff_histogram(ours.as_bytes(), &f.reference);
        // Gray and 4:4:4 files differ only by IDCT rounding; subsampled chroma
        // passes through the colour matrix, which amplifies that rounding.
        let max = hist.iter().rposition(|&c| c > 0).unwrap();
        let exact = hist[0] as f64 / f.reference.len() as f64;
        assert!(
            max <= 1,
            "{}: max diff {max}, histogram {:?}",
            f.name,
            &hist[..4]
        );
        assert!(exact > 0.999, "{}: only {exact} exact", f.name);
    }
}

#[test]
fn decode_matches_system_libjpeg() {
    for f in fixtures() {
        let ours = ephemera_core::jpeg::decode_bytes(&f.jpeg).unwrap();
        let reference = ephemera_refjpeg::decode(&f.jpeg).unwrap();
        let max = ours
            .as_bytes()
            .iter()
            .zip(&reference.rgb)
            .map(|(a, b)| a.abs_diff(*b))
            .max();
        assert!(max <= Some(1), "{}: {max:?}", f.name);
    }
}

#[test]
fn coefficients_match_libjpeg() {
    for f in fixtures() {
        let ours = decode_coefficients(&parse_jfif(&f.jpeg).unwrap()).unwrap();
        for (c, grid) in ours.grids.iter().enumerate() {
            let reference = ephemera_refjpeg::coefficients(&f.jpeg, c).unwrap();
            for by in 0..reference.blocks_h {
                for bx in 0..reference.blocks_w {
                    assert_eq!(
                        grid.at(bx, by).0,
                        reference.blocks[by * reference.blocks_w + bx],
                        "{} component {c} block ({bx},{by})",
                        f.name
                    );
                }
            }
        }
    }
}

#[test]
fn progressive_is_rejected() {
    let bytes =
        fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/progressive.jpg")).unwrap();
    assert!(matches!(
        parse_jfif(&bytes),
        Err(JpegError::UnsupportedMode(_))
    ));
}
