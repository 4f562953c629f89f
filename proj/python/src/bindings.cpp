#include <cstdint>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fwtt/completion.hpp"
#include "fwtt/dtns.hpp"
#include "fwtt/errors.hpp"
#include "fwtt/harness.hpp"
#include "fwtt/patterns.hpp"
#include "fwtt/tensor.hpp"

namespace py = pybind11;
using namespace fwtt;

namespace {

using F64Array = py::array_t<double, py::array::f_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::f_style | py::array::forcecast>;

Shape shape_of(const py::array& a) {
  Shape s(static_cast<std::size_t>(a.ndim()));
  for (py::ssize_t d = 0; d < a.ndim(); ++d) s[static_cast<std::size_t>(d)] = a.shape(d);
  return s;
}

// Numpy Fortran order matches first-index-fastest storage.
DenseTensor to_tensor(const F64Array& a) {
  const double* p = a.data();
  return DenseTensor(shape_of(a), std::vector<double>(p, p + a.size()));
}

F64Array to_array(const DenseTensor& t) {
  F64Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

FiberPattern to_pattern(py::array mask) {
  const U8Array a = U8Array::ensure(mask);
  if (!a) throw InvalidArgument("pattern must be convertible to a uint8 array");
  std::vector<std::uint8_t> flags(a.data(), a.data() + a.size());
  for (auto& f : flags) f = f != 0;
  return FiberPattern(shape_of(a), std::move(flags));
}

py::array_t<bool> to_mask(const FiberPattern& p) {
  py::array_t<bool, py::array::f_style> out(std::vector<py::ssize_t>(p.base_shape().begin(), p.base_shape().end()));
  std::copy(p.flags().begin(), p.flags().end(), out.mutable_data());
  return out;
}

TTDecomposition to_tt(const std::vector<F64Array>& cores) {
  std::vector<DenseTensor> cs;
  for (const auto& c : cores) {
    if (c.ndim() != 3) throw InvalidArgument("TT cores must be 3-dimensional");
    cs.push_back(to_tensor(c));
  }
  return TTDecomposition(std::move(cs));
}

std::vector<F64Array> to_cores(const TTDecomposition& tt) {
  std::vector<F64Array> out;
  for (const auto& c : tt.cores()) out.push_back(to_array(c));
  return out;
}

py::dict report_dict(const ConditionReport& r) {
  py::list splits;
  for (const auto& s : r.splits) {
    py::dict d;
    d["split"] = s.split;
    d["rank"] = s.rank;
    d["slices"] = s.slice_count;
    d["used_slices"] = s.used_slices;
    d["min_rows_per_slice"] = s.min_rows_per_slice;
    d["generic_slice_rank"] = s.generic_slice_rank;
    d["slices_isorank"] = s.slices_isorank;
    d["overlap_graph_connected"] = s.overlap_graph_connected;
    d["union_covers_all_rows"] = s.union_covers_all_rows;
    splits.append(d);
  }
  py::dict d;
  d["overall_valid"] = r.overall_valid;
  d["observed_fiber_count"] = r.observed_fiber_count;
  d["required_fibers"] = r.required_fibers;
  d["last_core_ok"] = r.last_core_ok;
  d["penultimate_ok"] = r.penultimate_ok;
  d["penultimate_deficient_slices"] = r.penultimate_deficient_slices;
  d["splits"] = splits;
  d["failed_conditions"] = r.failed_conditions();
  d["messages"] = r.messages;
  return d;
}

py::dict complete_py(const F64Array& data, py::array mask, const std::vector<Index>& ranks, const std::string& method,
                     const std::string& combine, double tol, bool validate_first) {
  const DenseTensor t = to_tensor(data);
  const FiberPattern p = to_pattern(std::move(mask));
  CompletionConfig cfg{ranks, parse_method(method), parse_combination(combine), tol, validate_first};
  CompletionResult r;
  {
    py::gil_scoped_release release;
    r = complete(t, p, cfg);
  }
  py::list unfoldings;
  for (const auto& u : r.unfoldings) {
    py::dict d;
    d["split"] = u.split;
    d["gap"] = u.gap;
    d["submatrices"] = u.submatrices;
    d["warnings"] = u.warnings;
    unfoldings.append(d);
  }
  py::list residuals;
  for (const auto& s : r.slice_residuals) {
    py::dict d;
    d["slice"] = s.slice;
    d["rows"] = s.rows;
    d["residual"] = s.residual;
    d["rcond"] = s.rcond;
    residuals.append(d);
  }
  py::dict out;
  out["cores"] = to_cores(r.tt);
  out["unfoldings"] = unfoldings;
  out["last_singular_values"] = r.last_singular_values;
  out["slice_residuals"] = residuals;
  out["validity"] = r.report ? py::object(report_dict(*r.report)) : py::object(py::none());
  return out;
}

py::object load_py(const std::filesystem::path& path) {
  const DtnsObject obj = load_dtns(path);
  if (const auto* t = std::get_if<DenseTensor>(&obj)) return to_array(*t);
  if (const auto* tt = std::get_if<TTDecomposition>(&obj)) return py::cast(to_cores(*tt));
  return to_mask(std::get<FiberPattern>(obj));
}

}  // namespace

PYBIND11_MODULE(_fwtt, m) {
  m.doc() = "Fiber-wise tensor-train completion";

  static py::exception<Error> error(m, "Error");
  static py::exception<InvalidArgument> invalid(m, "InvalidArgument", error.ptr());
  static py::exception<ValidationError> validation(m, "ValidationError", error.ptr());
  static py::exception<IdentifiabilityError> identifiability(m, "IdentifiabilityError", error.ptr());
  static py::exception<FormatError> format(m, "FormatError", error.ptr());
  py::register_exception_translator([](std::exception_ptr ep) {
    const auto raise = [](py::handle type, const char* what, const char* attr, py::object value) {
      py::object exc = type(what);
      if (attr) exc.attr(attr) = std::move(value);
      PyErr_SetObject(type.ptr(), exc.ptr());
    };
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const ValidationError& e) {
      raise(validation, e.what(), "conditions", py::cast(e.conditions()));
    } catch (const IdentifiabilityError& e) {
      raise(identifiability, e.what(), "stage", py::cast(e.stage()));
    } catch (const InvalidArgument& e) {
      raise(invalid, e.what(), nullptr, py::none());
    } catch (const FormatError& e) {
      raise(format, e.what(), nullptr, py::none());
    } catch (const Error& e) {
      raise(error, e.what(), nullptr, py::none());
    }
  });

  m.def("unfold", [](const F64Array& t, Index split) { return Matrix(unfold(to_tensor(t), split)); }, py::arg("tensor"),
        py::arg("split"));
  m.def("tt_svd", [](const F64Array& t, const std::vector<Index>& ranks) { return to_cores(tt_svd(to_tensor(t), ranks)); },
        py::arg("tensor"), py::arg("ranks"));
  m.def("parallel_tt_svd",
        [](const F64Array& t, const std::vector<Index>& ranks) { return to_cores(parallel_tt_svd(to_tensor(t), ranks)); },
        py::arg("tensor"), py::arg("ranks"));
  m.def("tt_to_dense", [](const std::vector<F64Array>& cores) { return to_array(tt_to_dense(to_tt(cores))); },
        py::arg("cores"));
  m.def("complete", &complete_py, py::arg("data"), py::arg("pattern"), py::arg("ranks"),
        py::arg("method") = "intersection", py::arg("combine") = "none", py::arg("tol") = kDefaultRankTol,
        py::arg("validate") = true);
  m.def("reconstruct_fibers",
        [](const std::vector<F64Array>& cores, const F64Array& data, py::array mask) {
          return to_array(reconstruct_fibers(to_tt(cores), to_tensor(data), to_pattern(std::move(mask))));
        },
        py::arg("cores"), py::arg("data"), py::arg("pattern"));
  m.def("validate", [](py::array mask, const std::vector<Index>& ranks) {
        return report_dict(validate(to_pattern(std::move(mask)), ranks));
      },
        py::arg("pattern"), py::arg("ranks"));
  m.def("random_pattern",
        [](const Shape& base, double rate, std::uint64_t seed) { return to_mask(random_pattern(base, rate, seed)); },
        py::arg("base_shape"), py::arg("missing_rate"), py::arg("seed"));
  m.def("mask_apply", [](const F64Array& t, py::array mask) {
        return to_array(mask_apply(to_tensor(t), to_pattern(std::move(mask))));
      },
        py::arg("tensor"), py::arg("pattern"));
  m.def("random_tt",
        [](const Shape& shape, const std::vector<Index>& ranks, std::uint64_t seed) {
          return to_cores(random_tt(shape, ranks, seed));
        },
        py::arg("shape"), py::arg("ranks"), py::arg("seed"));
  m.def("add_noise",
        [](const F64Array& t, double snr_db, std::uint64_t seed) { return to_array(add_noise(to_tensor(t), snr_db, seed)); },
        py::arg("tensor"), py::arg("snr_db"), py::arg("seed"));
  m.def("relative_error",
        [](const F64Array& ref, const F64Array& est) { return relative_error(to_tensor(ref), to_tensor(est)); },
        py::arg("ref"), py::arg("est"));
  m.def("load", &load_py, py::arg("path"));
  m.def("save_dense", [](const std::filesystem::path& path, const F64Array& t) { save_dtns(path, to_tensor(t)); },
        py::arg("path"), py::arg("tensor"));
  m.def("save_tt",
        [](const std::filesystem::path& path, const std::vector<F64Array>& cores) { save_dtns(path, to_tt(cores)); },
        py::arg("path"), py::arg("cores"));
  m.def("save_pattern",
        [](const std::filesystem::path& path, py::array mask) { save_dtns(path, to_pattern(std::move(mask))); },
        py::arg("path"), py::arg("pattern"));
}
