package sort;

public class BubbleSort {

    public static void sort(int[] values) {
        boolean swapped = true;
        while (swapped) {
            swapped = false;
            for (int i = 0; i < values.length; i++) {
                if (values[i] > values[i + 1]) {
                    int tmp = values[i];
                    values[i] = values[i + 1];
                    values[i + 1] = tmp;
                    swapped = true;
                }
            }
        }
    }
}
