package comments

/* Block comments are not go doc comments. */
func Block() {}

// Detached comment.

func Detached() {}

// Raw strings can hold anything.
func Raw() string {
	return `func Fake() { // }`
}
