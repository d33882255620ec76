#include "vsg/server.h"

#include <sys/socket.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "vsg/dataset.h"
#include "vsg/error.h"
#include "vsg/graph_json.h"
#include "vsg/nifti.h"
#include "vsg/png.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vsg {

namespace {

struct CaseData {
  LabelMap labels;
  std::optional<Volume> image;
  SceneGraph graph;
};

struct SliceView {
  int rows = 0;
  int cols = 0;
  // Flat voxel index of pixel (r, c).
  std::function<int64_t(int, int)> voxel;
};

std::optional<SliceView> MakeSlice(const Shape3& s, const std::string& axis, int64_t index) {
  SliceView v;
  if (axis == "axial") {
    if (index < 0 || index >= s.nz) return std::nullopt;
    v.rows = static_cast<int>(s.ny);
    v.cols = static_cast<int>(s.nx);
    v.voxel = [s, index](int r, int c) { return s.index(index, r, c); };
  } else if (axis == "coronal") {
    if (index < 0 || index >= s.ny) return std::nullopt;
    v.rows = static_cast<int>(s.nz);
    v.cols = static_cast<int>(s.nx);
    v.voxel = [s, index](int r, int c) { return s.index(r, index, c); };
  } else if (axis == "sagittal") {
    if (index < 0 || index >= s.nx) return std::nullopt;
    v.rows = static_cast<int>(s.nz);
    v.cols = static_cast<int>(s.ny);
    v.voxel = [s, index](int r, int c) { return s.index(r, c, index); };
  } else {
    return std::nullopt;
  }
  return v;
}

// Background transparent; bleeding, ventricle system, midline.
const std::array<Rgba, 4> kOverlayPalette = {
    Rgba{0, 0, 0, 0}, Rgba{220, 40, 40, 160}, Rgba{40, 120, 230, 160}, Rgba{240, 210, 40, 160}};

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& message) {
  SendJson(res, status, {{"error", message}});
}

}  // namespace

struct AnnotationServer::Impl {
  std::string root;
  std::vector<std::string> ids;
  httplib::Server http;
  std::thread thread;

  std::mutex cache_mutex;
  std::map<std::string, std::shared_ptr<const CaseData>> cache;
  std::map<std::string, std::unique_ptr<std::mutex>> write_locks;

  bool known(const std::string& id) const { return std::find(ids.begin(), ids.end(), id) != ids.end(); }

  std::shared_ptr<const CaseData> load(const std::string& id) {
    {
      std::lock_guard<std::mutex> lock(cache_mutex);
      const auto it = cache.find(id);
      if (it != cache.end()) return it->second;
    }
    auto data = std::make_shared<CaseData>();
    data->labels = ReadCaseLabels(root, id);
    data->graph = ReadCaseGraph(root, id);
    const fs::path image = fs::path(CaseDir(root, id)) / "image.nii.gz";
    if (fs::exists(image)) {
      data->image = ReadVolume(image.string());
      if (data->image->shape() != data->labels.shape()) {
        throw Error(ErrorKind::kShapeMismatch, id + ": image and label map differ in shape");
      }
    }
    std::lock_guard<std::mutex> lock(cache_mutex);
    return cache.emplace(id, std::move(data)).first->second;
  }

  std::mutex& write_lock(const std::string& id) {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto& m = write_locks[id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  void invalidate(const std::string& id) {
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.erase(id);
  }

  // Runs `body` for a known case, mapping failures to HTTP errors.
  template <typename F>
  void with_case(const httplib::Request& req, httplib::Response& res, F&& body) {
    const std::string id = req.matches[1];
    if (!known(id)) return SendError(res, 404, "unknown case '" + id + "'");
    try {
      body(id);
    } catch (const Error& e) {
      SendError(res, e.kind() == ErrorKind::kIoFailure ? 500 : 400, id + ": " + e.what());
    }
  }

  void routes() {
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, PUT, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    http.Get("/api/cases", [this](const httplib::Request&, httplib::Response& res) {
      SendJson(res, 200, {{"cases", ids}});
    });

    http.Get(R"(/api/cases/([^/]+)/meta)", [this](const httplib::Request& req, httplib::Response& res) {
      with_case(req, res, [&](const std::string& id) {
        const auto data = load(id);
        json doc = SceneGraphToJson(data->graph);
        doc.erase("relations");
        doc["case_id"] = id;
        doc["has_image"] = data->image.has_value();
        SendJson(res, 200, doc);
      });
    });

    http.Get(R"(/api/cases/([^/]+)/slice/([a-z]+)/(-?\d+))", [this](const httplib::Request& req,
                                                                      httplib::Response& res) {
      with_case(req, res, [&](const std::string& id) {
        const auto data = load(id);
        const auto view = MakeSlice(data->labels.shape(), req.matches[2], std::stoll(req.matches[3]));
        if (!view) return SendError(res, 404, "no such slice");
        const bool image = data->image.has_value();
        double wl = image ? 40.0 : 1.5;
        double ww = image ? 80.0 : 3.0;
        try {
          if (req.has_param("wl")) wl = std::stod(req.get_param_value("wl"));
          if (req.has_param("ww")) ww = std::stod(req.get_param_value("ww"));
        } catch (const std::exception&) {
          return SendError(res, 400, "wl and ww must be numbers");
        }
        if (!(ww > 0.0) || !std::isfinite(wl)) return SendError(res, 400, "ww must be > 0");
        std::vector<uint8_t> pixels(static_cast<size_t>(view->rows) * static_cast<size_t>(view->cols));
        const double low = wl - ww / 2.0;
        for (int r = 0; r < view->rows; ++r) {
          for (int c = 0; c < view->cols; ++c) {
            const int64_t v = view->voxel(r, c);
            const double value = image ? data->image->value(v) : data->labels.labels.data[static_cast<size_t>(v)];
            const double t = std::clamp((value - low) / ww, 0.0, 1.0);
            pixels[static_cast<size_t>(r) * static_cast<size_t>(view->cols) + static_cast<size_t>(c)] =
                static_cast<uint8_t>(std::lround(255.0 * t));
          }
        }
        res.set_content(EncodeGrayPng(view->cols, view->rows, pixels), "image/png");
      });
    });

    http.Get(R"(/api/cases/([^/]+)/overlay/([a-z]+)/(-?\d+))", [this](const httplib::Request& req,
                                                                        httplib::Response& res) {
      with_case(req, res, [&](const std::string& id) {
        const auto data = load(id);
        const auto view = MakeSlice(data->labels.shape(), req.matches[2], std::stoll(req.matches[3]));
        if (!view) return SendError(res, 404, "no such slice");
        std::vector<uint8_t> indices(static_cast<size_t>(view->rows) * static_cast<size_t>(view->cols));
        for (int r = 0; r < view->rows; ++r) {
          for (int c = 0; c < view->cols; ++c) {
            indices[static_cast<size_t>(r) * static_cast<size_t>(view->cols) + static_cast<size_t>(c)] =
                data->labels.labels.data[static_cast<size_t>(view->voxel(r, c))];
          }
        }
        res.set_content(EncodeIndexedPng(view->cols, view->rows, indices, kOverlayPalette), "image/png");
      });
    });

    http.Get(R"(/api/cases/([^/]+)/relations)", [this](const httplib::Request& req, httplib::Response& res) {
      with_case(req, res, [&](const std::string& id) {
        const auto data = load(id);
        SendJson(res, 200, {{"case_id", id}, {"relations", RelationsToJson(data->graph.relations)}});
      });
    });

    http.Put(R"(/api/cases/([^/]+)/relations)", [this](const httplib::Request& req, httplib::Response& res) {
      with_case(req, res, [&](const std::string& id) {
        std::vector<Relation> relations;
        try {
          const json body = json::parse(req.body);
          relations = RelationsFromJson(body.is_object() && body.contains("relations") ? body.at("relations") : body);
        } catch (const json::exception& e) {
          return SendError(res, 400, std::string("invalid JSON: ") + e.what());
        } catch (const Error& e) {
          return SendError(res, 400, e.what());
        }
        std::lock_guard<std::mutex> guard(write_lock(id));
        SceneGraph graph = ReadCaseGraph(root, id);
        graph.relations = std::move(relations);
        const std::vector<Violation> violations = Validate(graph);
        if (!violations.empty()) {
          json list = json::array();
          for (const auto& v : violations) {
            list.push_back({{"rule", RuleName(v.rule)}, {"ids", v.ids}, {"message", v.message}});
          }
          return SendJson(res, 422, {{"case_id", id}, {"violations", list}});
        }
        WriteSceneGraph(graph, (fs::path(CaseDir(root, id)) / "graph.json").string());
        invalidate(id);
        SendJson(res, 200, {{"case_id", id}, {"relations", RelationsToJson(graph.relations)}});
      });
    });
  }
};

AnnotationServer::AnnotationServer(const std::string& data_dir) : impl_(std::make_unique<Impl>()) {
  impl_->root = data_dir;
  impl_->ids = ListCases(data_dir);
  if (impl_->ids.empty()) throw Error(ErrorKind::kIoFailure, "no cases under " + data_dir);
  impl_->routes();
}

AnnotationServer::~AnnotationServer() { Stop(); }

int AnnotationServer::Start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::kIoFailure, "cannot bind " + host);
  } else if (!impl_->http.bind_to_port(host, port)) {
    throw Error(ErrorKind::kIoFailure, "port " + std::to_string(port) + " is in use or unavailable on " + host);
  }
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void AnnotationServer::Run(const std::string& host, int port) {
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error(ErrorKind::kIoFailure, "port " + std::to_string(port) + " is in use or unavailable on " + host);
  }
  impl_->http.listen_after_bind();
}

void AnnotationServer::Stop() {
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vsg
