//! File formats: byte layout of the grid containers and exact round trips
//! through a bundle on disk.

use std::io::Cursor;

use proptest::prelude::*;
use symplane::io::{read_depth, read_jsonl, read_ply, write_depth, write_jsonl, write_ply, CorrespondenceRecord, PlaneRecord, Precision};
use symplane::pipeline::{write_synthetic_bundle, SynthSettings};
use symplane::synth::{SceneSpec, Shape};
use symplane::{DepthMap, Plane, PointCloud, Vec3};

#[test]
fn depth_container_layout() {
    let mut depth = DepthMap::invalid(3, 2);
    depth.set(0, 0, 1.5);
    depth.set(2, 1, 0.25);
    let mut bytes = Vec::new();
    write_depth(&mut bytes, &depth, Precision::F32).unwrap();
    assert_eq!(bytes.len(), 14 + 6 * 4);
    assert_eq!(&bytes[0..4], b"SYMD");
    assert_eq!(&bytes[4..6], &1u16.to_le_bytes());
    assert_eq!(&bytes[6..10], &3u32.to_le_bytes());
    assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
    assert_eq!(&bytes[14..18], &1.5f32.to_le_bytes());
    assert!(f32::from_le_bytes(bytes[18..22].try_into().unwrap()).is_nan());
    assert_eq!(&bytes[34..38], &0.25f32.to_le_bytes());

    let mut wide = Vec::new();
    write_depth(&mut wide, &depth, Precision::F64).unwrap();
    assert_eq!(&wide[4..6], &2u16.to_le_bytes());
    assert_eq!(wide.len(), 14 + 6 * 8);
}

#[test]
fn depth_container_rejects_corruption() {
    let depth = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, f64::NAN]).unwrap();
    let mut bytes = Vec::new();
    write_depth(&mut bytes, &depth, Precision::F64).unwrap();
    assert!(read_depth(&mut Cursor::new(&bytes[..bytes.len() - 1])).is_err());
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(read_depth(&mut Cursor::new(&longer)).is_err());
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(read_depth(&mut Cursor::new(&magic)).is_err());
    let mut version = bytes;
    version[4] = 9;
    assert!(read_depth(&mut Cursor::new(&version)).is_err());
}

proptest! {
    #[test]
    fn depth_round_trip_is_bit_exact(w in 1usize..8, h in 1usize..8, seed in any::<u64>()) {
        let values: Vec<f64> = (0..w * h)
            .map(|k| {
                let x = (seed.wrapping_mul(k as u64 + 1) % 10_007) as f64 / 97.0 + 0.001;
                if k % 5 == 3 { f64::NAN } else { x }
            })
            .collect();
        let depth = DepthMap::new(w, h, values).unwrap();
        let mut bytes = Vec::new();
        write_depth(&mut bytes, &depth, Precision::F64).unwrap();
        let back = read_depth(&mut Cursor::new(bytes)).unwrap();
        prop_assert_eq!(back.depth.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), depth.depth.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn plane_records_round_trip(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64, d in -1e3..1e3f64, support in 0.0..1e6f64) {
        prop_assume!(x * x + y * y + z * z > 1e-3);
        let plane = Plane::new(Vec3::new(x, y, z), d).unwrap();
        let record = PlaneRecord::new(&plane, support);
        let text = serde_json::to_string(&record).unwrap();
        let back: PlaneRecord = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &record);
        prop_assert_eq!(back.plane().unwrap(), plane);
    }
}

#[test]
fn ply_and_records_round_trip() {
    let cloud = PointCloud::new(vec![Vec3::new(0.1, -2.0, 3.5), Vec3::new(1e-7, 4e5, -0.0)]).unwrap();
    let mut bytes = Vec::new();
    write_ply(&mut bytes, &cloud, Some(&[0.5, 1.0]), Precision::F64).unwrap();
    let (back, conf) = read_ply(&mut Cursor::new(bytes)).unwrap();
    assert_eq!(back, cloud);
    assert_eq!(conf, Some(vec![0.5, 1.0]));

    let records = vec![CorrespondenceRecord {
        image_a: "a".into(),
        image_b: "b".into(),
        flipped_b: true,
        matches: vec![[1, 2, 3, 4], [5, 6, 7, 8]],
    }];
    let mut text = Vec::new();
    write_jsonl(&mut text, &records).unwrap();
    let back: Vec<CorrespondenceRecord> = read_jsonl(Cursor::new(text), "correspondences").unwrap();
    assert_eq!(back, records);
}

#[test]
fn synthetic_bundle_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let settings = SynthSettings {
        scene: SceneSpec {
            camera_count: 4,
            surface_samples: 200,
            ..SceneSpec::new(Shape::CrossPlan, 2, 0)
        },
        matches_per_record: 50,
        ..SynthSettings::default()
    };
    let (bundle, scene) = write_synthetic_bundle(dir.path(), &settings, 1).unwrap();
    bundle.validate().unwrap();
    let reopened = symplane::io::SceneBundle::open(dir.path()).unwrap();
    for (i, id) in scene.image_ids.iter().enumerate() {
        let depth = reopened.depth(id).unwrap();
        let bits = |d: &DepthMap| d.depth.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&depth), bits(&scene.depths[i]));
    }
    assert_eq!(reopened.cameras().unwrap(), scene.cameras);
    let gt: Vec<Plane> = reopened
        .read_planes(symplane::io::GT_PLANES)
        .unwrap()
        .iter()
        .map(|r| r.plane().unwrap())
        .collect();
    assert_eq!(gt, scene.planes);
}
