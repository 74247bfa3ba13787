#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "hideseek/errors.hpp"
#include "hideseek/map_spec.hpp"
#include "hideseek/vec_env.hpp"

namespace py = pybind11;
using namespace hideseek;

namespace {

constexpr const char* kAbiVersion = "hideseek-abi/1";
constexpr std::size_t kAlign = 64;

// Owns a host allocation (a numpy byte array) and a pool writing into it.
class Pool {
 public:
  Pool(const MapSpec& spec, const VecConfig& config) {
    const BufferPlan plan = plan_buffers(spec, config);
    storage_ = py::array_t<std::uint8_t>(static_cast<py::ssize_t>(plan.total_bytes + kAlign));
    auto* raw = reinterpret_cast<std::byte*>(storage_.mutable_data());
    const std::size_t skip = (kAlign - reinterpret_cast<std::uintptr_t>(raw) % kAlign) % kAlign;
    base_ = raw + skip;
    env_ = std::make_unique<VecEnv>(spec, config, std::span<std::byte>(base_, plan.total_bytes));
    actions_.resize(config.n_envs * static_cast<std::size_t>(env_->n_agents()));

    buffer_ = py::array_t<std::uint8_t>({static_cast<py::ssize_t>(plan.total_bytes)},
                                        {static_cast<py::ssize_t>(1)},
                                        reinterpret_cast<std::uint8_t*>(base_), storage_);
    for (const auto& d : env_->plan().descriptors) {
      std::vector<py::ssize_t> shape(d.shape.begin(), d.shape.end());
      py::array view;
      if (d.dtype == "uint8") {
        view = py::array_t<std::uint8_t>(shape, reinterpret_cast<std::uint8_t*>(base_ + d.offset), storage_);
      } else {
        view = py::array_t<float>(shape, reinterpret_cast<float*>(base_ + d.offset), storage_);
      }
      views_[py::str(std::string(to_string(d.role)))] = view;
    }
  }

  py::dict reset() {
    require_open();
    py::gil_scoped_release release;
    env_->reset();
    return views_;
  }

  // actions: float32 (n_envs, n_agents, 3) holding (ax, ay, radio target).
  py::dict step(const py::array& actions) {
    require_open();
    if (actions.dtype().kind() != 'f' || actions.dtype().itemsize() != 4) {
      throw ContractError("actions must be float32, got " + std::string(py::str(actions.dtype())));
    }
    const auto n = static_cast<py::ssize_t>(env_->n_envs());
    const auto a = static_cast<py::ssize_t>(env_->n_agents());
    if (actions.ndim() != 3 || actions.shape(0) != n || actions.shape(1) != a || actions.shape(2) != 3) {
      throw ContractError("actions must have shape (" + std::to_string(n) + ", " + std::to_string(a) +
                          ", 3)");
    }
    const auto in = py::array_t<float>::ensure(actions).unchecked<3>();
    for (py::ssize_t e = 0; e < n; ++e) {
      for (py::ssize_t k = 0; k < a; ++k) {
        AgentAction& act = actions_[static_cast<std::size_t>(e * a + k)];
        act.ax = in(e, k, 0);
        act.ay = in(e, k, 1);
        const float radio = in(e, k, 2);
        act.radio_target = static_cast<std::int32_t>(radio);
        if (static_cast<float>(act.radio_target) != radio) {
          throw ContractError("radio target must be an integer, got " + std::to_string(radio));
        }
      }
    }
    py::gil_scoped_release release;
    env_->step(actions_);
    return views_;
  }

  void close() {
    if (env_) env_->close();
  }
  bool closed() const { return env_->closed(); }

  py::list descriptors() const {
    py::list out;
    for (const auto& d : env_->plan().descriptors) {
      py::dict item;
      item["role"] = std::string(to_string(d.role));
      item["dtype"] = std::string(d.dtype);
      item["shape"] = py::tuple(py::cast(d.shape));
      item["offset"] = d.offset;
      item["extent"] = d.extent;
      out.append(item);
    }
    return out;
  }

  py::dict views() const { return views_; }
  py::array buffer() const { return buffer_; }
  std::size_t n_envs() const { return env_->n_envs(); }
  int n_agents() const { return env_->n_agents(); }
  std::size_t n_workers() const { return env_->n_workers(); }

 private:
  void require_open() const {
    if (env_->closed()) throw ContractError("pool is closed");
  }

  py::array_t<std::uint8_t> storage_;
  std::byte* base_ = nullptr;
  std::unique_ptr<VecEnv> env_;
  std::vector<AgentAction> actions_;
  py::array buffer_;
  py::dict views_;
};

std::unique_ptr<Pool> create_pool(const std::string& map_path, const std::string& config_path,
                                  std::size_t n_envs, std::size_t n_workers, const std::string& mode,
                                  std::uint64_t seed, bool desync, bool auto_reset) {
  const auto parsed = parse_obs_mode(mode);
  if (!parsed) throw ValidationError("unknown observation mode '" + mode + "'");
  if (n_envs < 1) throw ValidationError("n_envs must be >= 1");
  const MapSpec spec = load_map_spec(map_path, config_path);
  VecConfig c;
  c.n_envs = n_envs;
  c.n_workers = n_workers;
  c.mode = *parsed;
  c.seed = seed;
  c.desync = desync;
  c.auto_reset = auto_reset;
  return std::make_unique<Pool>(spec, c);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("ABI_VERSION") = kAbiVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_OSError);

  py::class_<Pool>(m, "Pool")
      .def("reset", &Pool::reset)
      .def("step", &Pool::step, py::arg("actions"))
      .def("close", &Pool::close)
      .def("descriptors", &Pool::descriptors)
      .def_property_readonly("views", &Pool::views)
      .def_property_readonly("buffer", &Pool::buffer)
      .def_property_readonly("closed", &Pool::closed)
      .def_property_readonly("n_envs", &Pool::n_envs)
      .def_property_readonly("n_agents", &Pool::n_agents)
      .def_property_readonly("n_workers", &Pool::n_workers);

  m.def("create_pool", &create_pool, py::arg("map_path"), py::arg("config_path"), py::arg("n_envs") = 1,
        py::arg("n_workers") = 0, py::arg("mode") = "decentralized", py::arg("seed") = 0,
        py::arg("desync") = true, py::arg("auto_reset") = true);
  m.def("reset", [](Pool& p) { return p.reset(); });
  m.def("step", [](Pool& p, const py::array& actions) { return p.step(actions); });
  m.def("close", [](Pool& p) { p.close(); });
  m.def("descriptors", [](const Pool& p) { return p.descriptors(); });
}
