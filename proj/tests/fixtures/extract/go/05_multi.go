package multi

var handlers = map[string]func(){
	"a": func() {},
}

// Init registers handlers.
func Init() {
	handlers["b"] = func() {
		println("b")
	}
}

// Pair returns two values.
func Pair() (int, error) {
	return 1, nil
}
