class Widget : public Base {
 public:
  // Builds a widget.
  Widget(int w, int h) : w_(w), h_{h} {}

  /** Compares widgets. */
  bool operator==(const Widget& o) const { return w_ == o.w_; }

  ~Widget() override {}

 private:
  int w_;
  int h_;
};

/* Area of a widget. */
int Widget::area() const noexcept {
  auto f = [](int v) { return v * 2; };
  const char* raw = R"x(int fake() { })x";
  return f(w_) * h_;
}
