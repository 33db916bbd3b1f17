using System;

namespace Demo
{
    /// <summary>A calculator.</summary>
    public class Calculator
    {
        /// <summary>
        /// Adds two ints.
        /// </summary>
        public int Add(int a, int b)
        {
            return a + b;
        }

        public int Value { get; set; }

        /** Subtracts. */
        public Calculator(int start) : base()
        {
            Value = start;
        }
    }
}
