pub mod consensus_cmd;
pub mod cost_cmd;
pub mod econ_cmd;
pub mod quant_cmd;
pub mod route_cmd;
pub mod simulate_cmd;
