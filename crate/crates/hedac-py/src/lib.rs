use pyo3::prelude::*;

#[pymodule]
fn hedac_py(_m: &Bound<'_, PyModule>) -> PyResult<()> { Ok(()) }
