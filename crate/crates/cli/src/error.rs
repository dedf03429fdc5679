use crease_core::augment::AugmentError;
use crease_core::bridge::BridgeError;
use crease_core::dataset::DatasetError;
use crease_core::edgeproc::EdgeError;
use crease_core::gray::ImageError;
use crease_core::metrics::MetricsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "level": "error", "kind": self.kind(), "message": self.to_string() })
            .to_string()
    }
}

fn image_is_runtime(e: &ImageError) -> bool {
    matches!(e, ImageError::Io(_))
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        if image_is_runtime(&e) {
            CliError::Runtime(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let runtime = match &e {
            DatasetError::Io { .. } => true,
            DatasetError::Image(i) => image_is_runtime(i),
            DatasetError::Metrics(MetricsError::Io(_)) => true,
            _ => false,
        };
        if runtime {
            CliError::Runtime(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<EdgeError> for CliError {
    fn from(e: EdgeError) -> Self {
        let runtime = match &e {
            EdgeError::Io(_) => true,
            EdgeError::Image(i) => image_is_runtime(i),
            _ => false,
        };
        if runtime {
            CliError::Runtime(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io(_) => CliError::Runtime(e.to_string()),
            MetricsError::Csv(ref c) if c.is_io_error() => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<BridgeError> for CliError {
    fn from(e: BridgeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
