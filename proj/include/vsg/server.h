#ifndef VSG_SERVER_H_
#define VSG_SERVER_H_

#include <memory>
#include <string>

namespace vsg {

// HTTP/JSON API v1 over a case directory:
//   GET /api/cases
//   GET /api/cases/{id}/meta
//   GET /api/cases/{id}/slice/{axis}/{index}?wl=..&ww=..   8-bit gray PNG
//   GET /api/cases/{id}/overlay/{axis}/{index}              indexed PNG
//   GET /api/cases/{id}/relations
//   PUT /api/cases/{id}/relations                           422 on violations
// Axis is axial (z), coronal (y) or sagittal (x). Slices show image.nii.gz
// when the case has one, else the label map.
class AnnotationServer {
 public:
  // Throws kIoFailure when the directory holds no cases.
  explicit AnnotationServer(const std::string& data_dir);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Serves on a background thread and returns the bound port (port 0 picks a
  // free one). Throws kIoFailure when the port is unavailable.
  int Start(const std::string& host, int port);
  // Blocks until Stop() is called from another thread.
  void Run(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vsg

#endif  // VSG_SERVER_H_
