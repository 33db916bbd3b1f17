package server

import "fmt"

// Server serves requests.
type Server struct {
	Addr string
}

// Start launches the server.
func (s *Server) Start() error {
	fmt.Println("starting {", s.Addr)
	return nil
}

// Stop halts the server.
func (s Server) Stop() {
	go func() {
		fmt.Println("stopped")
	}()
}
