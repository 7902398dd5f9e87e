use corrtrack::features::{fmap_file_name, fuse, load_precomputed, read_fmap, write_fmap, BlockSpec, FeatureBlock};
use corrtrack::features::{FeatureProviderConfig, Provenance};
use corrtrack::fft::Grid;
use rand::{Rng, SeedableRng};

/// Little-endian layout written field by field, as an external exporter would.
fn encode(blocks: &[(&str, usize, usize, usize, f32, Vec<f32>)]) -> Vec<u8> {
    let mut out = b"FMAP".to_vec();
    out.extend(1u32.to_le_bytes());
    out.extend((blocks.len() as u32).to_le_bytes());
    for (name, c, r1, r2, stride, values) in blocks {
        out.extend((name.len() as u32).to_le_bytes());
        out.extend(name.as_bytes());
        for v in [*c, *r1, *r2] {
            out.extend((v as u32).to_le_bytes());
        }
        out.extend(stride.to_le_bytes());
        for v in values {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

fn random_values(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-50.0f32..50.0)).collect()
}

#[test]
fn exporter_layout_round_trips_bit_exactly() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let dense = random_values(&mut rng, 512 * 3 * 4);
    let seg = random_values(&mut rng, 21 * 6 * 8);
    let bytes = encode(&[
        ("densenet201_L3", 512, 3, 4, 16.0, dense.clone()),
        ("fcn8s_score", 21, 6, 8, 8.0, seg.clone()),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(fmap_file_name(3));
    assert_eq!(path.file_name().unwrap(), "frame_000003.fmap");
    std::fs::write(&path, &bytes).unwrap();

    let stack = read_fmap(&path).unwrap();
    let names: Vec<&str> = stack.blocks().iter().map(|b| b.name()).collect();
    assert_eq!(names, ["densenet201_L3", "fcn8s_score"]);
    for (block, (expected, res, stride)) in stack.blocks().iter().zip([(&dense, (3, 4), 16.0), (&seg, (6, 8), 8.0)]) {
        assert_eq!(block.resolution(), res);
        assert_eq!(block.stride(), stride);
        let decoded: Vec<u32> = block.channels().iter().flat_map(|c| c.as_slice().iter().map(|v| v.to_bits())).collect();
        let original: Vec<u32> = expected.iter().map(|v| v.to_bits()).collect();
        assert_eq!(decoded, original);
    }

    // the writer emits exactly the same bytes
    let copy = dir.path().join("copy.fmap");
    write_fmap(&copy, &stack).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), bytes);

    let cfg = FeatureProviderConfig::Fmap {
        dir: dir.path().to_path_buf(),
        blocks: vec![
            BlockSpec {
                name: "densenet201_L3".into(),
                channels: 512,
                rows: None,
                cols: None,
            },
            BlockSpec {
                name: "fcn8s_score".into(),
                channels: 21,
                rows: Some(6),
                cols: Some(8),
            },
        ],
        semantic_block: Some("fcn8s_score".into()),
    };
    assert_eq!(load_precomputed(dir.path(), 3, &cfg).unwrap().total_channels(), 533);
}

#[test]
fn writer_matches_layout_for_small_stack() {
    let grids = vec![
        Grid::from_vec(2, 3, vec![1.0, -2.0, 3.5, 0.0, f32::MIN_POSITIVE, 7.25]),
        Grid::from_vec(2, 3, vec![0.5; 6]),
    ];
    let stack = fuse(vec![FeatureBlock::new("hog", grids, 4.0, Provenance::Precomputed).unwrap()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.fmap");
    write_fmap(&path, &stack).unwrap();
    let mut values = vec![1.0, -2.0, 3.5, 0.0, f32::MIN_POSITIVE, 7.25];
    values.extend([0.5; 6]);
    assert_eq!(std::fs::read(&path).unwrap(), encode(&[("hog", 2, 2, 3, 4.0, values)]));
}
