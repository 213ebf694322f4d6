// temporary debug: device numbers needed for drive design
use stirap_sim::{device::*, units::*};

fn main() {
    for cutoff in [9usize, 11] {
        let spec = FluxQubitSpec {
            e_c: ghz(4.0),
            e_j_over_e_c: 50.0,
            junction_asymmetry: 0.54,
            flux_bias_f: 0.5,
            charge_cutoff: cutoff,
        };
        let (h0, q) = build_flux_hamiltonian(&spec).unwrap();
        let model = diagonalize(&h0, &q, 6).unwrap();
        println!("flux cutoff {cutoff}:");
        println!("  omega01/2pi = {:.5} GHz, omega12/2pi = {:.5} GHz", to_ghz(model.omega(0,1)), to_ghz(model.omega(1,2)));
        println!("  E_j-E_0 (GHz): {:?}", (0..6).map(|j| (to_ghz(model.omega(0,j))*1e4).round()/1e4).collect::<Vec<_>>());
        for (i,j) in [(0,1),(1,2),(2,3),(0,3),(1,4),(2,5),(3,4)] {
            println!("  |Q_{i}{j}| = {:.6e}  (phase {:.3})", model.coupling_abs(i,j), model.coupling[[i,j]].arg());
        }
        let sens = flux_bias_sensitivity(&spec, BiasParam::EjOverEc, 0.25).unwrap();
        println!("  a = {:.4} (dE1dx {:.4e}, dE2dx {:.4e}, nonlin {:.2e})", sens.correlation_a, sens.de1_dx, sens.de2_dx, sens.nonlinearity);
    }
    let tspec = TransmonSpec { e_c: ghz(0.212), e_j_over_e_c: 49.0, charge_bias_qg: 0.5, charge_cutoff: 100 };
    let (h0, q) = build_transmon_hamiltonian(&tspec).unwrap();
    let model = diagonalize(&h0, &q, 6).unwrap();
    println!("transmon:");
    println!("  omega01/2pi = {:.6} GHz  alpha/2pi = {:.6} GHz  beta/2pi = {:.6} GHz",
        to_ghz(model.omega(0,1)), to_ghz(model.anharmonicity_alpha.unwrap()), to_ghz(model.anharmonicity_beta.unwrap()));
    for (i,j) in [(0,1),(1,2),(2,3),(0,3),(3,4),(1,4),(4,5)] {
        println!("  |Q_{i}{j}| = {:.6e}  (phase {:+.3})", model.coupling_abs(i,j), model.coupling[[i,j]].arg());
    }
    let sens = transmon_bias_sensitivity(&tspec, BiasParam::EjOverEc, 0.5).unwrap();
    println!("  a = {:.4}  nonlin {:.2e}", sens.correlation_a, sens.nonlinearity);
}
