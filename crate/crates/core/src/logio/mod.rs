//! On-disk formats: event logs, experiment configs and model matrices.

pub mod config;
pub mod log;
pub mod model;

pub use config::{parse_config, parse_config_str, ConfigFileError, CONFIG_SCHEMA_VERSION};
pub use log::{read_log, read_log_from, write_log, write_log_to, LogError, LogRecord, LOG_SCHEMA_VERSION};
pub use model::{
    load_agents, model_file_name, read_matrix, read_matrix_from, save_agents, write_matrix, write_matrix_to, Matrix,
    ModelFileError,
};
