//! Riemannian Langevin optimization and sampling on products of spheres,
//! with exact spherical Brownian increments and Burer-Monteiro Max-Cut.
//!
//! ```
//! use sphere_langevin::brownian::IncrementMode;
//! use sphere_langevin::geometry::{random_point, ManifoldShape};
//! use sphere_langevin::langevin::{run_chain, LangevinConfig};
//! use sphere_langevin::maxcut::{bm_cut_report, cycle_graph};
//! use sphere_langevin::objective::BurerMonteiro;
//! use sphere_langevin::rng::stream;
//!
//! let g = cycle_graph(5);
//! let shape = ManifoldShape::new(g.n(), 3).unwrap();
//! let objective = BurerMonteiro::new(g.cost_matrix().clone());
//! let mut config = LangevinConfig::new(0.0625, 5e4, 2000);
//! config.mode = IncrementMode::tangent_approx(0.05);
//! let x0 = random_point(shape, &mut stream(7, 0));
//! let run = run_chain(&objective, x0, config, &mut stream(7, 1)).unwrap();
//! let cut = bm_cut_report(&g, &run.best_position, 64, &mut stream(7, 2)).unwrap();
//! assert_eq!(cut.best_cut, 4.0);
//! ```

pub mod brownian;
pub mod cli;
pub mod geometry;
pub mod langevin;
pub mod maxcut;
pub mod objective;
pub mod rng;
pub mod theory;
pub mod validation;
pub mod wright_fisher;
