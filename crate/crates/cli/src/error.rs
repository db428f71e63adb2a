use std::fmt;

/// Failure of a CLI run, mapped onto the process exit status.
#[derive(Debug)]
pub enum CliError {
    Config { field: String, message: String },
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => write!(f, "config error: {field}: {message}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<pairstop::Error> for CliError {
    fn from(e: pairstop::Error) -> Self {
        match &e {
            pairstop::Error::InvalidParameter { field, message } => CliError::config(field, message.clone()),
            pairstop::Error::NoSignChange { samples } => {
                let show = |s: &[(f64, f64)]| -> String {
                    let parts: Vec<String> =
                        s.iter().map(|(b, f)| format!("F_N({b:.6e}) = {f:.6e}")).collect();
                    parts.join(", ")
                };
                let trail = if samples.len() > 5 {
                    format!(
                        "{}, ..., {}",
                        show(&samples[..2]),
                        show(&samples[samples.len() - 3..])
                    )
                } else {
                    show(samples)
                };
                CliError::Numerical(format!("{e}; samples: {trail}"))
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
