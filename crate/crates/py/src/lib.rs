use pyo3::prelude::*;

#[pymodule]
fn bamg_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
