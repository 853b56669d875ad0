#include "cvsat/quad.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <memory>
#include <stdexcept>
#include <string>

namespace cvsat::quad {

namespace {

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const {
    gsl_integration_workspace_free(w);
  }
};

double trampoline(double x, void* params) {
  return (*static_cast<const std::function<double(double)>*>(params))(x);
}

const bool handler_disabled = [] {
  gsl_set_error_handler_off();
  return true;
}();

void check_status(int status, double result) {
  (void)result;
  if (status != 0 && status != GSL_EROUND && status != GSL_EMAXITER) {
    throw std::runtime_error(std::string("quadrature failed: ") +
                             gsl_strerror(status));
  }
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol) {
  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
      gsl_integration_workspace_alloc(2048));
  gsl_function gf;
  gf.function = &trampoline;
  gf.params = const_cast<std::function<double(double)>*>(&f);
  double result = 0.0;
  double abserr = 0.0;
  int status = gsl_integration_qags(&gf, a, b, abs_tol, rel_tol, 2048,
                                    ws.get(), &result, &abserr);
  check_status(status, result);
  return result;
}

double integrate_upper(const std::function<double(double)>& f, double a,
                       double abs_tol, double rel_tol) {
  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
      gsl_integration_workspace_alloc(2048));
  gsl_function gf;
  gf.function = &trampoline;
  gf.params = const_cast<std::function<double(double)>*>(&f);
  double result = 0.0;
  double abserr = 0.0;
  int status = gsl_integration_qagiu(&gf, a, abs_tol, rel_tol, 2048, ws.get(),
                                     &result, &abserr);
  check_status(status, result);
  return result;
}

}  // namespace cvsat::quad
