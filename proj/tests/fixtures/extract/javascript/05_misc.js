'use strict';

const config = {
  name: "demo",
  run() {
    return 1;
  },
};

/** Generates ids. */
function* ids() {
  let i = 0;
  while (true) yield i++;
}

/**
 * Handles a request.
 */
app.get("/", function handler(req, res) {
  res.send("ok");
});

if (config.name) {
  function inBlock() {
    return 2 / 1;
  }
}
