use pyo3::prelude::*;

#[pymodule]
fn vna_py(_m: &Bound<PyModule>) -> PyResult<()> { Ok(()) }
