use caplb::assets::cylinder_skeleton;
use caplb::boundaries::{bouzidi_wall, bouzidi_weights, pressure_iolet, velocity_inlet, IoletCondition};
use caplb::geometry::{voxelize, IoletKind, VoxelDomain, VoxelizeOptions};
use caplb::lbm::{equilibrium, SolverOptions, C, OPPOSITE, Q, W};
use caplb::simulation::{flow_rate, run_steady, ConvergenceMonitor, Flux};
use caplb::{Rheology, Solver};
use proptest::prelude::*;
use std::f64::consts::PI;

const RADIUS: f64 = 5.0;
const LENGTH: f64 = 40.0;
const TAU: f64 = 0.8;
const DRHO: f64 = 0.02;

fn z_pipe() -> VoxelDomain {
    let s = cylinder_skeleton([0.0, 0.0, 0.5 * LENGTH], [0.0, 0.0, 1.0], 2.0 * RADIUS, LENGTH);
    voxelize(&s, 1.0, VoxelizeOptions::default()).unwrap()
}

fn with_densities(mut dom: VoxelDomain, inlet: f64, outlet: f64) -> VoxelDomain {
    for io in &mut dom.iolets {
        io.density = match io.kind {
            IoletKind::Inlet => inlet,
            IoletKind::Outlet => outlet,
        };
    }
    dom
}

fn steady(dom: &VoxelDomain) -> Solver {
    let monitor = ConvergenceMonitor::lattice(0.01).with_tolerance(1e-7);
    let conditions = IoletCondition::from_domain(dom);
    run_steady(dom, Rheology::newtonian(TAU).unwrap(), &conditions, &monitor, SolverOptions::default()).unwrap().0
}

fn mid_plane_flux(solver: &Solver, dom: &VoxelDomain) -> f64 {
    let k = dom.dims[2] / 2;
    let point = dom.position(dom.index([0, 0, k]));
    flow_rate(solver, dom, point, 2, Flux::Mass, |_| true).unwrap()
}

#[test]
fn pressure_driven_pipe_matches_hagen_poiseuille() {
    let dom = with_densities(z_pipe(), 1.0 + DRHO, 1.0);
    let solver = steady(&dom);
    let nu = (TAU - 0.5) / 3.0;
    let gradient = DRHO / 3.0 / LENGTH;
    let q_star = PI * RADIUS.powi(4) * gradient / (8.0 * nu);
    let q = mid_plane_flux(&solver, &dom).abs();
    assert!((q / q_star - 1.0).abs() < 0.05, "Q {q} vs {q_star}");
}

#[test]
fn flow_runs_from_high_to_low_pressure_and_reverses() {
    let forward = with_densities(z_pipe(), 1.0 + DRHO, 1.0);
    let backward = with_densities(z_pipe(), 1.0, 1.0 + DRHO);
    let qf = mid_plane_flux(&steady(&forward), &forward);
    let qb = mid_plane_flux(&steady(&backward), &backward);
    // the inlet sits at the +z end
    assert!(qf < 0.0, "forward flux {qf}");
    assert!(qb > 0.0, "backward flux {qb}");
    assert!(((qf + qb) / qf).abs() < 1e-6, "{qf} vs {qb}");
}

#[test]
fn equal_iolet_pressures_give_no_flow() {
    // starts at density 1, so a decaying pressure transient remains at convergence
    let dom = with_densities(z_pipe(), 1.01, 1.01);
    let solver = steady(&dom);
    let peak = solver.macros().iter().map(|m| m.u.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    assert!(peak < 1e-8, "peak {peak}");
}

#[test]
fn half_way_bouzidi_is_plain_bounce_back() {
    let w = bouzidi_weights(0.5);
    assert_eq!((w.own, w.partner), (1.0, 0.0));
    for (f_out, up, opp) in [(0.1, 0.3, 0.7), (0.023, -4.0, 9.0)] {
        assert_eq!(bouzidi_wall(0.5, f_out, up, opp), f_out);
    }
}

#[test]
fn resting_inlet_is_bounce_back_and_fast_inlet_rejected() {
    for i in 1..Q {
        assert_eq!(velocity_inlet(i, 0.05, [0.0; 3]).unwrap(), 0.05);
    }
    assert!(velocity_inlet(1, 0.05, [0.2, 0.0, 0.0]).is_err());
}

#[test]
fn velocity_inlet_matches_equilibrium_difference() {
    // at equilibrium with density 1 and velocity u the rule is exact
    let u = [0.01, -0.02, 0.015];
    let feq: [f64; Q] = equilibrium(1.0, u);
    for i in 1..Q {
        let got = velocity_inlet(i, feq[i], u).unwrap();
        assert!((got - feq[OPPOSITE[i]]).abs() < 1e-15, "dir {i}");
    }
}

#[test]
fn anti_bounce_back_reproduces_equilibrium() {
    let (rho, u) = (1.03, [0.02, 0.01, -0.03]);
    let feq: [f64; Q] = equilibrium(rho, u);
    for i in 1..Q {
        let got = pressure_iolet(i, feq[i], rho, u);
        assert!((got - feq[OPPOSITE[i]]).abs() < 1e-15, "dir {i}");
    }
    // at rest the reflected population is 2 w rho - f
    assert!((pressure_iolet(3, 0.1, 1.0, [0.0; 3]) - (2.0 * W[3] - 0.1)).abs() < 1e-15);
    assert_eq!(C[3].iter().map(|c| c * c).sum::<i32>(), 1);
}

proptest! {
    #[test]
    fn bouzidi_weights_sum_to_one_and_are_continuous(q in 0.001f64..=1.0) {
        let w = bouzidi_weights(q);
        prop_assert!((w.own + w.partner - 1.0).abs() < 1e-12);
        prop_assert!(w.own >= 0.0 && w.partner >= 0.0);
        let below = bouzidi_weights(0.5f64 - 1e-12);
        let above = bouzidi_weights(0.5);
        prop_assert!((below.own - above.own).abs() < 1e-9);
    }

    #[test]
    fn short_links_interpolate_upstream(q in 0.01f64..0.5, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        // a population profile linear along the link: the value reflected at
        // the wall is the one a distance 1 - 2q upstream of the fluid site
        let f = |s: f64| a + b * s;
        let got = bouzidi_wall(q, f(0.0), f(-1.0), 0.0);
        prop_assert!((got - f(2.0 * q - 1.0)).abs() < 1e-12);
    }
}
