use rand::Rng;
use rand_distr::StandardNormal;

use super::surface::{planar_ghost_paths, GhostPath, TubeSurface};
use super::{PathKind, Projection, Provenance, RadarConfig, SimPoint, SurfaceMode, VehicleState};
use crate::geometry::{clip_segment_to_rect, Vec2, Vec3};
use crate::point::RadarPoint;
use crate::tunnel::SegmentedTunnelModel;

/// Whether the straight ray `a -> b` passes through the box of any vehicle
/// other than `skip`. Boxes are footprints extruded from the road to the
/// roof.
pub fn occluded(a: &Vec3, b: &Vec3, vehicles: &[VehicleState], skip: u32) -> bool {
    vehicles.iter().filter(|v| v.id != skip).any(|v| {
        let (la, lb) = (v.to_local(&a.xy()), v.to_local(&b.xy()));
        let half = Vec2::new(0.5 * v.length, 0.5 * v.width);
        match clip_segment_to_rect(la, lb, -half, half) {
            Some((t0, t1)) => {
                let z = |t: f64| a.z + t * (b.z - a.z);
                z(t0).min(z(t1)) < v.roof_height
            }
            None => false,
        }
    })
}

/// Scattering points of a vehicle at roof height.
pub fn facet_points(v: &VehicleState, facets: &[f64]) -> Vec<Vec3> {
    facets
        .iter()
        .map(|f| {
            let p = v.position + f * v.length * v.heading;
            Vec3::new(p.x, p.y, v.roof_height)
        })
        .collect()
}

/// Ghost paths of `target` under the configured surface.
pub fn ghost_paths(
    model: &SegmentedTunnelModel,
    radar: &RadarConfig,
    target: &Vec3,
) -> Vec<GhostPath> {
    let o = radar.position();
    match radar.surface {
        SurfaceMode::Segmented => planar_ghost_paths(model, &o, target),
        SurfaceMode::Curved => TubeSurface::new(model).ghost_paths(&o, target),
    }
}

/// Measured top-view position of an apparent 3D scatterer before noise.
fn project(radar: &RadarConfig, apparent: &Vec3) -> Vec2 {
    let o = radar.position();
    match radar.projection {
        Projection::Orthographic => apparent.xy(),
        Projection::SlantRange => {
            let flat = apparent.xy() - o.xy();
            o.xy() + (apparent - o).norm() * flat.normalize()
        }
    }
}

/// One frame of returns from `vehicles`.
///
/// Random draws happen in a fixed order (vehicles in slice order, facets in
/// order, direct before ghosts, three draws per return), so a seeded `rng`
/// fixes the output.
pub fn simulate_frame<R: Rng + ?Sized>(
    model: &SegmentedTunnelModel,
    radar: &RadarConfig,
    vehicles: &[VehicleState],
    rng: &mut R,
) -> Vec<SimPoint> {
    let o = radar.position();
    let noise = &radar.noise;
    let sigma_az = noise.sigma_azimuth_deg.to_radians();
    let mut out = Vec::new();
    let mut emit = |apparent: &Vec3, first_leg: &Vec3, v: &VehicleState, provenance: Provenance, rng: &mut R| {
        let u: f64 = rng.random();
        let n_r: f64 = rng.sample(StandardNormal);
        let n_a: f64 = rng.sample(StandardNormal);
        if u < noise.dropout {
            return;
        }
        let p = project(radar, apparent) - o.xy();
        let range = p.norm() + noise.sigma_range * n_r;
        let az = p.x.atan2(p.y) + sigma_az * n_a;
        let q = o.xy() + range * Vec2::new(az.sin(), az.cos());
        if !radar.in_gate(q.y) {
            return;
        }
        let los = (first_leg - o).normalize();
        let v_d = Vec3::new(v.velocity.x, v.velocity.y, 0.0).dot(&los);
        out.push(SimPoint {
            point: RadarPoint::new(q.x, q.y, v_d),
            provenance,
        });
    };

    for v in vehicles {
        if !radar.in_gate(v.position.y) {
            continue;
        }
        for (k, f) in facet_points(v, &radar.facets).iter().enumerate() {
            let facet = k as u8;
            if !occluded(&o, f, vehicles, v.id) {
                let prov = Provenance {
                    vehicle_id: v.id,
                    facet,
                    path: PathKind::Direct,
                };
                emit(f, f, v, prov, rng);
            }
            if !radar.emit_ghosts {
                continue;
            }
            for g in ghost_paths(model, radar, f) {
                if occluded(&o, &g.reflection, vehicles, v.id)
                    || occluded(&g.reflection, f, vehicles, v.id)
                {
                    continue;
                }
                let prov = Provenance {
                    vehicle_id: v.id,
                    facet,
                    path: PathKind::Ghost {
                        segment: g.segment,
                    },
                };
                emit(&g.image, &g.reflection, v, prov, rng);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{NoiseModel, VehicleKind, VehicleScript};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn car(id: u32, x: f64, y: f64, m: &SegmentedTunnelModel) -> VehicleState {
        VehicleScript::lane(id, VehicleKind::Car, x, y, y + 100.0, 20.0)
            .state_at(0.0, m)
            .unwrap()
    }

    #[test]
    fn direct_only_single_point() {
        let m = SegmentedTunnelModel::straight_default();
        let radar = RadarConfig {
            emit_ghosts: false,
            facets: vec![0.0],
            noise: NoiseModel {
                dropout: 0.0,
                ..NoiseModel::default()
            },
            ..RadarConfig::default()
        };
        let v = car(1, 0.5, 150.0, &m);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = simulate_frame(&m, &radar, &[v], &mut rng);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].point.position() - v.position).norm() < 5.0 * 0.3 + 150.0 * 0.2f64.to_radians() * 5.0);
        assert_eq!(pts[0].provenance.path, PathKind::Direct);
    }

    #[test]
    fn truck_hides_car_behind_it() {
        let m = SegmentedTunnelModel::straight_default();
        let truck = VehicleScript::lane(1, VehicleKind::Truck, 0.0, 100.0, 200.0, 10.0)
            .state_at(0.0, &m)
            .unwrap();
        let c = car(2, 0.0, 115.0, &m);
        let o = Vec3::new(0.0, 0.0, 5.1);
        for f in facet_points(&c, &[0.4, 0.0, -0.4]) {
            assert!(occluded(&o, &f, &[truck, c], c.id));
            assert!(!occluded(&o, &f, &[c], c.id));
        }
        // A car far enough behind is seen over the truck roof.
        let far = car(3, 0.0, 300.0, &m);
        assert!(!occluded(&o, &facet_points(&far, &[0.0])[0], &[truck], far.id));
    }

    #[test]
    fn noiseless_ghosts_invert_exactly() {
        let m = SegmentedTunnelModel::straight_default();
        let radar = RadarConfig {
            noise: NoiseModel::none(),
            facets: vec![0.0],
            ..RadarConfig::default()
        };
        let cfg = crate::correction::CorrectionConfig::default();
        let v = car(1, -0.7, 170.0, &m);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = simulate_frame(&m, &radar, &[v], &mut rng);
        let mut ghosts = 0;
        for p in &pts {
            if let PathKind::Ghost { segment } = p.provenance.path {
                ghosts += 1;
                let line = m.path_segment(segment.path).frame();
                let c = crate::correction::candidate_on_line(&m, &cfg, &p.point.position(), segment, &line, false)
                    .unwrap();
                assert!((c.position - v.position).norm() < 1e-6);
            }
        }
        assert!(ghosts > 0);
    }
}
