use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nmbg::descriptors::{eval_point_features, sh_basis, DescriptorSet};
use nmbg::geometry::{
    compute_scene_split, look_at, partition_mesh, pixel_ray_direction, project_point, Camera,
    Intrinsics, SceneSplit,
};
use nmbg::io::{parse_ply, Checkpoint};
use nmbg::rasterizer::{
    oracle_rasterize_mesh, oracle_rasterize_points, rasterize_mesh_with, rasterize_points_with,
    RasterOptions,
};
use nmbg::synthetic::random_raster_case;
use nmbg::{TriangleMesh, Vec3};

fn vec3() -> impl Strategy<Value = Vec3<f64>> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn camera(pos: Vec3<f64>, target: Vec3<f64>) -> Option<Camera<f64>> {
    let k = Intrinsics {
        fx: 40.0,
        fy: 44.0,
        cx: 20.0,
        cy: 15.0,
        width: 40,
        height: 30,
    };
    Camera::looking_at(k, pos, target, Vec3::new(0.0, 1.0, 0.0)).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projected_points_lie_on_their_pixel_ray(pos in vec3(), target in vec3(), p in vec3()) {
        prop_assume!((target - pos).norm() > 0.1);
        let Some(cam) = camera(pos, target) else { return Ok(()) };
        if let Some((u, v, _)) = project_point(p, &cam).visible() {
            let d = pixel_ray_direction(u, v, &cam);
            let want = (p - cam.position()).normalize();
            prop_assert!((d - want).norm() < 1e-6);
        }
    }

    #[test]
    fn split_is_translation_equivariant(
        ps in prop::collection::vec(vec3(), 2..8),
        t in vec3(),
    ) {
        let cams: Option<Vec<_>> = ps.iter().map(|&p| camera(p, p + Vec3::new(0.0, 0.0, 1.0))).collect();
        let moved: Option<Vec<_>> = ps.iter().map(|&p| camera(p + t, p + t + Vec3::new(0.0, 0.0, 1.0))).collect();
        let (Some(cams), Some(moved)) = (cams, moved) else { return Ok(()) };
        let (Ok(a), Ok(b)) = (compute_scene_split(&cams), compute_scene_split(&moved)) else { return Ok(()) };
        prop_assert!((a.center + t - b.center).norm() < 1e-9);
        prop_assert!((a.radius - b.radius).abs() < 1e-9);
    }

    #[test]
    fn partition_covers_every_face_once(seed in any::<u64>(), center in vec3(), radius in 0.1..6.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_raster_case::<f64, _>(&mut rng, 40, 30, 8).unwrap();
        let split = SceneSplit::new(center, radius).unwrap();
        let (fg, bg) = partition_mesh(&case.mesh, &split);
        let mut seen: Vec<usize> = fg.face_map.iter().chain(&bg.face_map).copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..case.mesh.faces.len()).collect::<Vec<_>>());
        for sub in [&fg, &bg] {
            for (f, &orig) in sub.mesh.faces.iter().zip(&sub.face_map) {
                let mapped = f.map(|i| sub.vertex_map[i]);
                prop_assert_eq!(mapped, case.mesh.faces[orig]);
            }
        }
    }

    #[test]
    fn rasterizers_match_oracles_for_any_tile_size(seed in any::<u64>(), tile in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_raster_case::<f64, _>(&mut rng, 64, 32, 32).unwrap();
        let opts = RasterOptions { tile_size: tile };
        prop_assert_eq!(
            rasterize_points_with(&case.mesh.vertices, &case.camera, case.radius, &opts),
            oracle_rasterize_points(&case.mesh.vertices, &case.camera, case.radius)
        );
        prop_assert_eq!(
            rasterize_mesh_with(&case.mesh, &case.camera, &opts),
            oracle_rasterize_mesh(&case.mesh, &case.camera)
        );
    }

    #[test]
    fn sh_basis_is_finite_and_band_zero_constant(d in vec3()) {
        prop_assume!(d.norm() > 1e-3);
        let b = sh_basis(d.normalize());
        prop_assert!(b.iter().all(|v| v.is_finite()));
        prop_assert!((b[0] - 0.28209479177387814).abs() < 1e-15);
    }

    #[test]
    fn point_features_are_linear_in_descriptors(seed in any::<u64>(), a in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_raster_case::<f64, _>(&mut rng, 20, 0, 12).unwrap();
        let buf = oracle_rasterize_points(&case.mesh.vertices, &case.camera, case.radius);
        let n = case.mesh.vertices.len();
        let x = DescriptorSet::from_vec(n, (0..n * 72).map(|i| ((i * 37 % 101) as f64) / 50.0 - 1.0).collect()).unwrap();
        let y = DescriptorSet::from_vec(n, (0..n * 72).map(|i| ((i * 53 % 97) as f64) / 40.0 - 1.2).collect()).unwrap();
        let xy = DescriptorSet::from_vec(n, x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| a * p + q).collect()).unwrap();
        let fx = eval_point_features(&buf, &x, &case.camera).unwrap();
        let fy = eval_point_features(&buf, &y, &case.camera).unwrap();
        let fxy = eval_point_features(&buf, &xy, &case.camera).unwrap();
        for i in 0..fxy.image.data.len() {
            prop_assert!((a * fx.image.data[i] + fy.image.data[i] - fxy.image.data[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn ply_parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let _ = parse_ply::<f64>(&bytes);
        let mut with_header = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        with_header.extend_from_slice(&bytes);
        let _ = parse_ply::<f32>(&with_header);
    }

    #[test]
    fn checkpoint_parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let mut b = b"NMBG\x01\x00\x00\x00".to_vec();
        b.extend_from_slice(&bytes);
        let _ = Checkpoint::from_bytes(&b);
    }

    #[test]
    fn look_at_is_a_rotation(pos in vec3(), target in vec3(), up in vec3()) {
        prop_assume!((target - pos).norm() > 1e-3 && up.norm() > 1e-3);
        if let Ok(r) = look_at(pos, target, up) {
            prop_assert!(r.orthonormality_error() < 1e-9);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn empty_mesh_rasterizes_to_empty_buffer() {
    let cam = camera(Vec3::new(0.0, 0.0, -3.0), Vec3::zero()).unwrap();
    let mesh = TriangleMesh::<f64>::new(vec![Vec3::zero()], vec![]).unwrap();
    assert_eq!(rasterize_mesh_with(&mesh, &cam, &RasterOptions::default()).occupied_count(), 0);
}
